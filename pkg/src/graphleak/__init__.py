"""graphleak: quantifying private-graph leakage of GNN feature explanations.

Train a 2-layer GCN target, explain it with six post-hoc methods, reconstruct
the private training graph from the released explanations (similarity and
structure-learning attacks plus baselines), measure attack success (AUC/AP),
explanation utility (fidelity/sparsity), and the attacker's downstream
advantage, and defend with a randomized-response mechanism.
"""

__version__ = "0.1.0"
