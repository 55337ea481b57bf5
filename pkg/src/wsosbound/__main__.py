"""Module entry point so the CLI also runs as python -m wsosbound."""

from wsosbound.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
