"""Entry point for the `lrca` console script."""
from __future__ import annotations

import logging
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from lrca.cli import parse, run, to_run_config
from lrca.config import LOG_FORMAT
from lrca.errors import InputError, NumericalError

logger = logging.getLogger("lrca")

EXIT_USAGE = 1
EXIT_NUMERICAL = 2


def _field_errors(e: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse(argv)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)
    try:
        return run(to_run_config(args))
    except ValidationError as e:
        print(f"error: {_field_errors(e)}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as e:
        print(f"numerical failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
