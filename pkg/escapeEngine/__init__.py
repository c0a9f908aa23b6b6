"""escapeEngine: BrFS / constant-depth RRW analysis toolkit for plateau escape."""
