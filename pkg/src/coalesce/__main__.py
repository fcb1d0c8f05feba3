import sys

from coalesce.harness.cli import main

sys.exit(main())
