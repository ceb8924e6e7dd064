import sys

from abelsets.cli import main

sys.exit(main())
