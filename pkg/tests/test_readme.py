import pathlib
import re

import numpy as np


def test_library_example_runs_as_printed():
    readme = pathlib.Path(__file__).resolve().parents[1] / "README.md"
    blocks = re.findall(r"```python\n(.*?)```", readme.read_text(), flags=re.S)
    assert blocks, "README lost its library example"
    namespace = {}
    exec(compile(blocks[0], str(readme), "exec"), namespace)
    # The quadratic-optimal tuning cycles with period 3 and the iterates
    # stay on the unit circle instead of approaching the minimizer.
    assert namespace["k"] == 3
    trace = namespace["trace"]
    norms = np.linalg.norm(trace.iterates, axis=1)
    assert abs(norms[-1] - 1.0) <= 1e-9
    assert norms.min() >= 0.5
