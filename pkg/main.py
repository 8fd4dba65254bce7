#!/usr/bin/env python3
"""
wheelbounds CLI

Run from a source checkout without installing:

    python main.py bounds --k1 1 --k2 2 --m1 0.14 --m2 0.25 --json
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent / "src"))

from wheelbounds.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
