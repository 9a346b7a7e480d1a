"""Majority voting by hand, then a full recipe inside a workspace."""

# %%
import tempfile
from pathlib import Path

from spanboost.ensemble import PREFER_O, EnsembleConfig, recipe_members, vote
from spanboost.tagcodec import BIO, TagSequence

members = [
    TagSequence(("O", "B-PROFESION", "I-PROFESION", "O"), BIO),
    TagSequence(("O", "B-PROFESION", "O", "O"), BIO),
    TagSequence(("O", "O", "I-PROFESION", "O"), BIO),
]
print(vote(members).tags)
print(vote(members[:2], EnsembleConfig(("a", "b"), PREFER_O)).tags)

# %%
for name in ("s1", "s2", "s3_clean", "s4", "s5"):
    print(name, len(recipe_members(name)))

# %%
from spanboost.cli import main
from spanboost.workspace import init_synthetic_workspace

root = Path(tempfile.mkdtemp()) / "ws"
init_synthetic_workspace(root, n_train=30, n_test=10, settings={"epochs": 3, "dim": 20})
main(["recipe", "--name", "s2", "--workspace", str(root)])
main(["eval", "--gold", str(root / "test_gold"), "--pred", str(root / "predictions" / "s2")])
