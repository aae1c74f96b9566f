"""Every ``console`` example in README.md reproduces byte for byte."""
import re
import shlex
from pathlib import Path

import pytest

from polybilliards.cli import main

README = Path(__file__).resolve().parent.parent / "README.md"
BLOCK = re.compile(r"```console\n\$ polybilliards (.*?)\n(.*?)```", re.S)
EXAMPLES = BLOCK.findall(README.read_text())


def test_readme_has_examples():
    assert len(EXAMPLES) >= 8


@pytest.mark.parametrize("command, expected", EXAMPLES, ids=[c for c, _ in EXAMPLES])
def test_readme_example(command, expected, capsys):
    main(shlex.split(command))
    assert capsys.readouterr().out == expected
