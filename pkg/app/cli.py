"""
Interface en ligne de commande.

    python -m app.cli <commande> [--config run.json] [--out table.csv] [--threads n]

Codes de sortie: 0 succès, 2 erreur de configuration, 3 échec numérique.
"""
import argparse
import logging
import sys
from typing import List, Optional

from app.core.config import settings
from app.core.errors import ValDistError
from app.schemas.run_config import RunConfig
from app.services.run_service import RunService, write_table

logger = logging.getLogger(__name__)

COMMANDS = ("density", "distcheck", "herglotz", "theorem2", "condition-a", "bessel", "mfunction")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="valdist", description=settings.DESCRIPTION)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", help="Document JSON de configuration du run")
        cmd.add_argument("--out", help="Fichier CSV de sortie (sortie standard par défaut)")
        cmd.add_argument("--threads", type=int, default=None, help="Nombre de workers (0 = auto)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=settings.LOG_LEVEL,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    try:
        config = RunConfig.from_file(args.config) if args.config else RunConfig()
        threads = args.threads if args.threads is not None else config.threads
        table = RunService(threads=threads).run(args.command, config)
        write_table(table, args.out or config.output)
    except ValDistError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
