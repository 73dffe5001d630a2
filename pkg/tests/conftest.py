"""Session-wide fixtures.

The 21-sample Bernoulli(0.8 / 0.2) design with lam1 = lam2 = 20 is the
worked reference model used across the policy, baseline and acceptance
tests.  Solving it is cheap but extracting and walking the full policy
tree is not, so both are built once per session and shared read-only —
tests that need to mutate a tree build their own small one.
"""

import pytest

from npkw.bellman import backward_recursion, bernoulli_model
from npkw.policy import extract_tree


@pytest.fixture(scope="session")
def fig_model():
    return bernoulli_model("0.8", "0.2", lam1=20, lam2=20, horizon=21)


@pytest.fixture(scope="session")
def fig_table(fig_model):
    return backward_recursion(fig_model)


@pytest.fixture(scope="session")
def fig_tree(fig_table):
    """Full-horizon policy tree (do not mutate)."""
    return extract_tree(fig_table)


@pytest.fixture(scope="session")
def fig_display(fig_table):
    """Seven-level display cut: what the reference figure shows."""
    return extract_tree(fig_table, max_depth=7)
