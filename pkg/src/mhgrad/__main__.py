import sys

from mhgrad.harness.cli import main

sys.exit(main())
