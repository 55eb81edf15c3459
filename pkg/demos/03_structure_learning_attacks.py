"""Learn the private adjacency end to end from released matrices.

Every candidate edge weight is a free parameter initialised with cosine
similarity of the attacker's inputs, then trained so that denoising
autoencoders can reconstruct corrupted features/explanations through the
generated graph while a small GCN fits the known labels.  The first half of
training is reconstruction-only warm-up; the classification loss joins in
the second half.
"""

from graphleak.attacks import GslConfig, run_gsl_attack
from graphleak.diffcore import RngStream
from graphleak.evaluation import auc, average_precision
from graphleak.explainers import explain_all
from graphleak.gnncore import GcnConfig, train_target
from graphleak.graphdata import sample_probe_set, synth_sbm

graph = synth_sbm(blocks=6, sizes=[12] * 6, p_in=0.9, p_out=0.01,
                  feature_signal=2.5, d=18, rng=RngStream(11))
target = train_target(graph, GcnConfig(hidden=16, dropout=0.3, epochs=150, seed=0))
explanations = explain_all(target, graph, "zorro", RngStream(1), tau=0.95, samples=30)
probes = sample_probe_set(graph, 0.15, RngStream(2, 31))

cfg = GslConfig(epochs=120, dae_hidden=32, cls_hidden=16, seed=0)
print(f"{'variant':<12} {'inputs':<22} {'AUC':>7} {'AP':>7}")
for variant, inputs in [
    ("slaps", "features+labels"),
    ("gse", "explanations+labels"),
    ("gsef_concat", "concat(X, E)+labels"),
    ("gsef_mult", "X*E+labels"),
    ("gsef", "two generators"),
]:
    recon, history = run_gsl_attack(variant, graph, explanations, cfg)
    scores = recon.pair_scores(probes.u, probes.v)
    print(f"{variant:<12} {inputs:<22} {auc(scores, probes.labels):>7.3f} "
          f"{average_precision(scores, probes.labels):>7.3f}")
    if variant == "gsef":
        first, last = history[0], history[-1]
        print(f"\nGSEF loss: epoch 1 total {first.total:.3f} "
              f"(features {first.l_dae_features:.3f}, explanations "
              f"{first.l_dae_explanations:.3f}) -> epoch {len(history)} "
              f"total {last.total:.3f} (+classification {last.l_classification:.3f})")

print("\nthe learned Bernoulli weights are the attack's edge scores;")
print("sample_graph() draws a concrete 0/1 reconstruction from them")
