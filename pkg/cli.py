#!/usr/bin/env python
"""
egolsm command line (compatibility layer)

The actual implementation is in the cli/ package.

Usage:
    python cli.py experiment --preset simulation1-desk
    python cli.py analyze --preset karate
"""

from cli.main import main

if __name__ == "__main__":
    main()
