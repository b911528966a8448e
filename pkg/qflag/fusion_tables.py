"""
Tabulated fusion and quantisation shift families.

A rule lists factors (node, m): the Q-function of a fundamental node shifted
by [m]. Fusing the factors lands on the target representation (Dynkin labels,
sparse); a quantisation rule lands on the trivial representation.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Tuple


class RuleKind(str, Enum):
    FUSION = "fusion"
    QUANTISATION = "quantisation"


@dataclass(frozen=True)
class FusionRule:
    label: str
    kind: RuleKind
    factors: Tuple[Tuple[int, int], ...]
    target: Tuple[Tuple[int, int], ...] = ()

    def target_labels(self, rank: int) -> Tuple[int, ...]:
        labels = [0] * rank
        for node, coefficient in self.target:
            labels[node - 1] += coefficient
        return tuple(labels)


def _fusion(label: str, factors, target) -> FusionRule:
    return FusionRule(label, RuleKind.FUSION, tuple(factors), tuple(target))


def _quant(label: str, factors) -> FusionRule:
    return FusionRule(label, RuleKind.QUANTISATION, tuple(factors))


def _pair(node: int, m: int, target) -> FusionRule:
    return _fusion(f"Q{node}[{m}] Q{node}[-{m}]", [(node, m), (node, -m)], target)


# --- A series ---
def a_series_rules(rank: int) -> List[FusionRule]:
    h = rank + 1
    rules = []
    for a in range(1, rank + 2):
        factors = [(1, a - 1 - 2 * k) for k in range(a)]
        if a <= rank:
            rules.append(_fusion(f"wedge^{a} of Q1", factors, [(a, 1)]))
        else:
            rules.append(_quant(f"wedge^{a} of Q1", factors))
    if h % 2 == 0:
        for a in range(1, rank + 1):
            rules.append(
                _quant(f"Q{a}[{h // 2}] Q{h - a}[-{h // 2}]", [(a, h // 2), (h - a, -h // 2)])
            )
    return rules


# --- D series ---
def d_series_rules(rank: int) -> List[FusionRule]:
    r = rank
    h = 2 * r - 2
    psi, eta = r - 1, r
    rules = []
    for m in range(r):
        if m == 0:
            target = [(psi, 1), (eta, 1)]
        elif m == r - 1:
            target = []
        else:
            target = [(r - 1 - m, 1)]
        if m % 2:
            pairs = [(psi, psi), (eta, eta)]
        else:
            pairs = [(psi, eta)]
        for left, right in pairs:
            rules.append(_fusion(f"Q{left}[{m}] Q{right}[-{m}]", [(left, m), (right, -m)], target))
    rules.append(_quant(f"Q1[{h // 2}] Q1[-{h // 2}]", [(1, h // 2), (1, -h // 2)]))
    return rules


# --- E series ---
_E_RULES: Dict[int, List[FusionRule]] = {
    6: [
        _quant("Q1[6] Q5[-6]", [(1, 6), (5, -6)]),
        _quant("Q1[-6] Q5[6]", [(1, -6), (5, 6)]),
        _pair(1, 4, [(1, 1)]),
        _quant("Q1[8] Q1[0] Q1[-8]", [(1, 8), (1, 0), (1, -8)]),
        _quant("Q5[8] Q5[0] Q5[-8]", [(5, 8), (5, 0), (5, -8)]),
        _pair(1, 1, [(2, 1)]),
        _fusion("Q1[2] Q1[0] Q1[-2]", [(1, 2), (1, 0), (1, -2)], [(3, 1)]),
        _pair(5, 1, [(4, 1)]),
        _fusion("Q1[3] Q5[-3]", [(1, 3), (5, -3)], [(6, 1)]),
        _fusion("Q1[-3] Q5[3]", [(1, -3), (5, 3)], [(6, 1)]),
        _pair(6, 1, [(3, 1)]),
        _pair(6, 4, [(6, 1)]),
        _pair(6, 3, [(1, 1), (5, 1)]),
    ],
    7: [
        _quant("Q6[9] Q6[9] Q6[-9] Q6[-9]", [(6, 9), (6, 9), (6, -9), (6, -9)]),
        _pair(6, 1, [(5, 1)]),
        _fusion("Q6[2] Q6[0] Q6[-2]", [(6, 2), (6, 0), (6, -2)], [(4, 1)]),
        _fusion("Q6[3] Q6[1] Q6[-1] Q6[-3]", [(6, 3), (6, 1), (6, -1), (6, -3)], [(3, 1)]),
        _pair(6, 5, [(1, 1)]),
        _pair(1, 1, [(2, 1)]),
        _fusion("Q1[3] Q6[-4]", [(1, 3), (6, -4)], [(7, 1)]),
        _pair(5, 5, [(2, 1)]),
        _pair(5, 2, [(3, 1)]),
        _pair(4, 5, [(3, 1)]),
        _pair(4, 7, [(5, 1)]),
        _fusion("Q1[11] Q7[-4]", [(1, 11), (7, -4)], [(6, 1)]),
        _fusion("Q1[3] Q7[-2]", [(1, 3), (7, -2)], [(4, 1)]),
        _fusion("Q6[11] Q7[-3]", [(6, 11), (7, -3)], [(1, 1)]),
    ],
    8: [
        _pair(7, 1, [(6, 1)]),
        _pair(7, 6, [(1, 1)]),
        _pair(6, 7, [(5, 1)]),
        _pair(6, 6, [(2, 1)]),
        _pair(6, 2, [(4, 1)]),
        _pair(1, 7, [(8, 1)]),
        _pair(8, 1, [(3, 1)]),
        _pair(7, 10, [(7, 1)]),
    ],
}


def fusion_rules(series: str, rank: int) -> List[FusionRule]:
    if series == "A":
        return a_series_rules(rank)
    if series == "D":
        return d_series_rules(rank)
    return list(_E_RULES[rank])
