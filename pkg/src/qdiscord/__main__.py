# -*- coding: utf-8 -*-

"""Command line interface for qdiscord."""

from .cli import main

if __name__ == "__main__":
    main(prog_name="qdiscord")
