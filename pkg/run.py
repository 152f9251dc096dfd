"""
Teleportation simulator - Launcher

Runs one verification mode from the command line.
Run with: python run.py <mode> [flags]   (python run.py --help for the full list)
"""

import sys

from src.api.cli import main

if __name__ == "__main__":
    sys.exit(main())
