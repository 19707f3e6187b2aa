#!/usr/bin/env python3
import sys

import dfsdecoy.ui.cli as cli


def main() -> int:
    return cli.main(sys.argv[1:])


if __name__ == '__main__':
    sys.exit(main())
