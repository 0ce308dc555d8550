"""Command-line entry: build a tree via a user factory and extract it.

    pytree-bridge --factory mypkg.trees:make_tree --out tree.bt.json

The factory is any zero-argument callable addressed as `module:name`.
Warnings go to stderr; the document goes to --out or stdout. Exit code 2
covers unloadable factories and non-tree inputs.
"""
import argparse
import importlib
import sys
from pathlib import Path
from typing import Optional

from .extractor import ExtractError, extract


def _load_factory(spec: str):
    module_name, sep, attr = spec.partition(":")
    if not sep or not module_name or not attr:
        raise ValueError(f"factory {spec!r} must look like module:callable")
    try:
        module = importlib.import_module(module_name)
    except ImportError as e:
        raise ValueError(f"cannot import {module_name!r}: {e}") from None
    try:
        factory = getattr(module, attr)
    except AttributeError:
        raise ValueError(
            f"{module_name!r} has no attribute {attr!r}") from None
    if not callable(factory):
        raise ValueError(f"{spec!r} is not callable")
    return factory


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="pytree-bridge",
        description="Serialize a live behavior tree into interchange JSON.")
    parser.add_argument("--factory", required=True, metavar="MODULE:NAME",
                        help="zero-argument callable returning the tree root")
    parser.add_argument("--out", metavar="FILE",
                        help="write here instead of stdout")
    args = parser.parse_args(argv)

    try:
        factory = _load_factory(args.factory)
        result = extract(factory())
    except (ValueError, TypeError) as e:
        print(f"pytree-bridge: error: {e}", file=sys.stderr)
        return 2

    for warning in result.warnings:
        print(f"pytree-bridge: warning: {warning}", file=sys.stderr)
    if args.out:
        Path(args.out).write_text(result.document)
    else:
        sys.stdout.write(result.document)
    return 0


if __name__ == "__main__":
    sys.exit(main())
