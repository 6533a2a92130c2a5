#!/usr/bin/env python3
"""Launcher: python mrisk.py price --config data/config.json"""

from src.main import main

if __name__ == "__main__":
    main()
