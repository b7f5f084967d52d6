import sys

from trilat_pso.cli import main

sys.exit(main())
