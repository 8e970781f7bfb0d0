import math

import numpy as np
import pytest

from attrikit.errors import ValidationError
from attrikit.expr import compile_expression


def ev(text, *row):
    node, _ = compile_expression(text)
    return float(node(np.array([row], dtype=float))[0])


@pytest.mark.parametrize("text,row,expected", [
    ("x1*x2 + 0.5*x1", (0.2, 0.5), 0.2),
    ("2^3^2", (0.0,), 512.0),
    ("-x1^2", (3.0,), -9.0),
    ("relu(x1 - 0.5)", (0.2,), 0.0),
    ("sin(pi/2) + cos(0) + exp(0)", (0.0,), 3.0),
    ("(x1 + x2) / 2", (1.0, 2.0), 1.5),
    ("1e-3 * x1", (2.0,), 2e-3),
    ("e", (0.0,), math.e),
])
def test_evaluates(text, row, expected):
    assert ev(text, *row) == pytest.approx(expected, rel=1e-12)


def test_reports_used_columns():
    _, used = compile_expression("x3 + x1*pi")
    assert used == {0, 2}


def test_custom_variable_names():
    node, used = compile_expression("2*y + 1", {"y": 0})
    assert used == {0}
    assert node(np.array([[0.25]]))[0] == 1.5


@pytest.mark.parametrize("bad", ["x1 +", "foo(x1)", "x1 $ 2", "(x1", "x0", "y", "x1 x2", ""])
def test_rejects_malformed(bad):
    with pytest.raises(ValidationError):
        compile_expression(bad)
