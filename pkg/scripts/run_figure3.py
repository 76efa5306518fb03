#!/usr/bin/env python3
"""Primary-SNR sweep: 0-60 dB against a secondary link pinned at 20 dB.

Shows both cognitive protocols converging on the QoS benchmark once the
primary is strong enough to be undisturbable.  Writes ``figure3.csv``
plus a gnuplot companion; extra arguments are forwarded to the CLI.
"""

import sys

from crul import cli

if __name__ == "__main__":
    sys.exit(cli.main(["figure3", "--emit-plot", *sys.argv[1:]]))
