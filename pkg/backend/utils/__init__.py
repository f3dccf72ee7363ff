# Utility functions: logging setup and report writers
