"""Rewrite the --help golden files: python tests/golden/regenerate.py"""
from pathlib import Path

from llmhpo.cli import build_parser

HERE = Path(__file__).parent
SUBCOMMANDS = (
    "prompt-render", "suggest", "analyze-variability", "analyze-compare", "optimize", "experiment-run",
)


def help_texts():
    parser = build_parser()
    yield "llmhpo", parser.format_help()
    sub = next(a for a in parser._actions if a.dest == "command")
    for name in SUBCOMMANDS:
        yield name, sub.choices[name].format_help()


if __name__ == "__main__":
    for name, text in help_texts():
        (HERE / f"{name}.help.txt").write_text(text)
