"""Regenerates the prior and filter fixtures from first principles."""
import json
import math
import random
import re
from collections import Counter

rng = random.Random(125)

prior_sets = []
for _ in range(40):
    k = rng.randint(1, 6)
    cands = [{"logprob": round(-rng.uniform(0.1, 40.0), 6), "tokens": rng.randint(1, 30)} for _ in range(k)]
    lam = 1.25
    raw = [math.exp(c["logprob"]) / c["tokens"] ** lam for c in cands]
    total = math.fsum(raw)
    prior_sets.append({"lambda": lam, "candidates": cands, "priors": [r / total for r in raw]})
# Tiny probabilities that underflow when exponentiated directly.
prior_sets.append({"lambda": 1.25,
                   "candidates": [{"logprob": -800.0, "tokens": 4}, {"logprob": -801.0, "tokens": 2}],
                   "priors": None})
a = -800.0 - 1.25 * math.log(4)
b = -801.0 - 1.25 * math.log(2)
m = max(a, b)
ea, eb = math.exp(a - m), math.exp(b - m)
prior_sets[-1]["priors"] = [ea / (ea + eb), eb / (ea + eb)]


def words(s):
    return re.findall(r"[a-z0-9]+", s.lower())


def cosine(x, y):
    cx, cy = Counter(words(x)), Counter(words(y))
    if not cx and not cy:
        return 1.0
    if not cx or not cy:
        return 0.0
    dot = sum(cx[w] * cy[w] for w in cx)
    return dot / math.sqrt(sum(v * v for v in cx.values()) * sum(v * v for v in cy.values()))


sentences = [
    "A cat sits on the sofa.",
    "A cat sits on a sofa.",
    "The cat is sitting on the sofa.",
    "A dog runs in the park.",
    "There is a red car.",
    "There is a red car near a tree.",
    "A red car is parked.",
    "Two people walk by.",
    "A cat sits on the sofa.",
    "The sofa is blue.",
]
filter_cases = []
for trial in range(30):
    k = rng.randint(2, 7)
    cands = [rng.choice(sentences) for _ in range(k)]
    tau = rng.choice([0.5, 0.7, 0.8, 0.9, 1.0])
    kept = []
    for i, c in enumerate(cands):
        if all(cosine(c, cands[j]) < tau for j in kept):
            kept.append(i)
    filter_cases.append({"threshold": tau, "candidates": cands, "kept": kept})

json.dump({"sets": prior_sets}, open("priors_lambda125.json", "w"), indent=1)
json.dump({"cases": filter_cases}, open("filter_candidates.json", "w"), indent=1)
