#!/usr/bin/env python3
"""Equal-SNR sweep: both links 0-40 dB, all protocols and methods.

Writes ``figure2.csv`` plus a gnuplot companion next to it.  Any extra
arguments are forwarded, so e.g. ``--samples 100000 --out /tmp/f2.csv``
work as they do on the CLI.
"""

import sys

from crul import cli

if __name__ == "__main__":
    sys.exit(cli.main(["figure2", "--emit-plot", *sys.argv[1:]]))
