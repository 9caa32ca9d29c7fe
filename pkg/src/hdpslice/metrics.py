"""Clustering agreement metrics and document-level label aggregation."""

import numpy as np

from .errors import DomainError


def nmi(a, b):
    """Normalized mutual information of two labelings, in [0, 1].

    Normalization is by the geometric mean sqrt(H(A) H(B)).  Two trivial
    (single-cluster) partitions agree perfectly and score 1; if exactly
    one side is trivial no information is shared and the score is 0.
    Invariant under relabeling either argument.
    """
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.size != b.size:
        raise DomainError(f"label sequences differ in length: {a.size} vs {b.size}")
    if a.size == 0:
        raise DomainError("labels must be nonempty")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    na, nb = ai.max() + 1, bi.max() + 1
    if na == 1 and nb == 1:
        return 1.0
    if na == 1 or nb == 1:
        return 0.0
    joint = np.bincount(ai * nb + bi, minlength=na * nb).reshape(na, nb) / a.size
    nz = joint > 0
    if na == nb and nz.sum(axis=1).max() == 1 and nz.sum(axis=0).max() == 1:
        return 1.0  # identical partitions up to relabeling
    pa = joint.sum(axis=1)
    pb = joint.sum(axis=0)
    mi = (joint[nz] * np.log(joint[nz] / np.outer(pa, pb)[nz])).sum()
    ha = -(pa * np.log(pa)).sum()
    hb = -(pb * np.log(pb)).sum()
    return float(min(1.0, max(0.0, mi / np.sqrt(ha * hb))))


def aggregate_labels(per_group):
    """Concatenate per-group labels in group-major, customer-minor order."""
    return np.concatenate([np.asarray(g).ravel() for g in per_group])


def majority_vote(per_doc_labels):
    """Most frequent label per document; ties go to the lowest label.

    `per_doc_labels` is a sequence of nonempty 1-d label arrays, one per
    document.  Returns one label per document.
    """
    out = np.empty(len(per_doc_labels), dtype=np.int64)
    for d, labels in enumerate(per_doc_labels):
        labels = np.asarray(labels, dtype=np.int64).ravel()
        if labels.size == 0:
            raise DomainError(f"document {d + 1} has no labels")
        counts = np.bincount(labels)
        out[d] = counts.argmax()  # argmax returns the first = lowest label
    return out
