import json
import sys
import traceback
from typing import Optional, Sequence

import bittensor as bt
from dotenv import load_dotenv
from pydantic import ValidationError

import dualgraph
from dualgraph.commands import COMMANDS
from dualgraph.exceptions import DualGraphError, InvalidInputError

FAILURE = 1
USAGE_ERROR = 2

load_dotenv()


def usage() -> str:
    width = max(len(name) for name in COMMANDS)
    lines = [
        f"dualgraph {dualgraph.__version__}",
        "usage: dualgraph <subcommand> [flags]   (dualgraph <subcommand> --help for flags)",
        "",
        "subcommands:",
    ]
    lines += [f"  {name.ljust(width)}  {cls.help}" for name, cls in COMMANDS.items()]
    return "\n".join(lines)


def error_record(error: str, message: str, exit_code: int, path: Optional[str] = None) -> dict:
    return {"error": error, "message": message, "exit_code": exit_code, "path": path}


def _fail(name: str, record: dict) -> int:
    bt.logging.error(f"{name} failed: {record['message']}")
    print(json.dumps(record), file=sys.stderr)
    return record["exit_code"]


def dispatch(argv: Sequence[str]) -> int:
    """
    Runs one subcommand. Returns 0 on success, 2 on usage errors, otherwise the
    exit code of the raised error; every failure prints a JSON record to stderr.
    """
    argv = list(argv)
    if not argv or argv[0] in ("-h", "--help"):
        print(usage())
        return 0 if argv else USAGE_ERROR

    name, flags = argv[0], argv[1:]
    cls = COMMANDS.get(name)
    if cls is None:
        print(
            json.dumps(error_record("UsageError", f"unknown subcommand '{name}'", USAGE_ERROR)),
            file=sys.stderr,
        )
        return USAGE_ERROR

    try:
        cls(cls.config(flags)).execute()
    except SystemExit as e:
        # argparse exits 0 after --help and 2 on bad flags
        return 0 if e.code in (0, None) else USAGE_ERROR
    except DualGraphError as e:
        return _fail(name, e.to_record())
    except ValidationError as e:
        return _fail(name, InvalidInputError(f"invalid input: {e}").to_record())
    except OSError as e:
        return _fail(name, error_record(type(e).__name__, str(e), FAILURE, e.filename))
    except Exception as e:
        bt.logging.debug(traceback.format_exc())
        return _fail(name, error_record(type(e).__name__, str(e), FAILURE))
    return 0


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
