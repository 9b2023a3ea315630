"""Command line front end: ``sim run``, ``sim list``, ``sim version``."""

import argparse
import configparser
import sys

from . import __version__
from ._accel import set_threads
from .errors import ConfigError, SimulationError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def read_config(path):
    """Flatten every section of an INI-style file into one dict."""
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config '{path}': {exc}") from None
    values = dict(parser.defaults())
    for section in parser.sections():
        values.update({k: v for k, v in parser.items(section)})
    return values


def parse_overrides(tokens):
    """``--key value`` pairs (or ``--key=value``) into a dict."""
    out = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument '{tok}'")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise ConfigError(f"missing value for --{key}")
            val = tokens[i + 1]
            i += 2
        out[key.replace("-", "_")] = val
    return out


def _error_line(kind, message, **extra):
    parts = [f"error kind={kind}"]
    parts += [f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}" for k, v in extra.items()]
    parts.append("message=" + " ".join(str(message).split()))
    return " ".join(parts)


def build_parser():
    p = argparse.ArgumentParser(prog="sim", description="Linear versus classical wave evolution scenarios.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a named scenario")
    r.add_argument("scenario")
    r.add_argument("--config", help="key = value config file")
    sub.add_parser("list", help="list scenarios")
    sub.add_parser("version", help="print the version")
    return p


def main(argv=None):
    from .scenarios import REGISTRY, build_config, run

    parser = build_parser()
    args, rest = parser.parse_known_args(argv)
    if args.command == "list":
        for name, sc in REGISTRY.items():
            print(f"{name}\t{sc.description}")
        return EXIT_OK
    if args.command == "version":
        print(f"polarwave {__version__}")
        return EXIT_OK
    try:
        file_values = read_config(args.config) if args.config else {}
        cfg = build_config(args.scenario, file_values, parse_overrides(rest))
    except ConfigError as exc:
        print(_error_line("config", exc), file=sys.stderr)
        return EXIT_CONFIG
    set_threads(cfg.threads)
    try:
        metrics = run(cfg)
    except SimulationError as exc:
        print(_error_line(exc.kind, exc, **exc.fields()), file=sys.stderr)
        return EXIT_RUNTIME
    except ConfigError as exc:
        print(_error_line("config", exc), file=sys.stderr)
        return EXIT_CONFIG
    for k, v in metrics.items():
        print(f"{k},{v}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
