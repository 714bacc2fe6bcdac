import sys

from mqka.cli import main

sys.exit(main())
