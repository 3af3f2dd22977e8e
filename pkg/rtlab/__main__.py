"""Entry point for python -m rtlab."""
from .cli import main

raise SystemExit(main())
