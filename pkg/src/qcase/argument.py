"""Claim tree built from a bundle and its bound report.

The tree makes the argument's shape auditable: the top-level claim is
split into the target-derivation claim and one claim per contributing
estimate (testing, scope compliance, the two detection mechanisms) plus
the three data-quality claims (unseen, representative, correctly
labelled). Claims whose evidence is absent still appear, marked
MISSING_EVIDENCE, so gaps stay visible instead of silently dropping out
of the argument.

Claim captions are tool-authored summaries, not quotations from any
notation standard.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum

from .budget import BoundReport, Verdict
from .evidence import (
    CaseBundle,
    DATASET_REPRESENTATIVE_ASSUMPTION,
    DATASET_UNSEEN_ASSUMPTION,
)

__all__ = [
    "NodeKind",
    "NodeStatus",
    "ArgumentNode",
    "build_tree",
    "propagate_status",
    "export_dot",
    "export_json",
    "tree_from_json",
]


class NodeKind(Enum):
    TOP_QUANTITATIVE = "top_quantitative"
    TARGET_DERIVATION = "target_derivation"
    TESTING_ESTIMATE = "testing_estimate"
    SCOPE_COMPLIANCE = "scope_compliance"
    SRF_DETECTION = "srf_detection"
    OOS_DETECTION = "oos_detection"
    DATA_UNSEEN = "data_unseen"
    DATA_REPRESENTATIVE = "data_representative"
    DATA_LABELS_CORRECT = "data_labels_correct"


# fixed emission order for children; also the DOT/JSON ordering
_CHILD_ORDER = [
    NodeKind.TARGET_DERIVATION,
    NodeKind.TESTING_ESTIMATE,
    NodeKind.SCOPE_COMPLIANCE,
    NodeKind.SRF_DETECTION,
    NodeKind.OOS_DETECTION,
    NodeKind.DATA_UNSEEN,
    NodeKind.DATA_REPRESENTATIVE,
    NodeKind.DATA_LABELS_CORRECT,
]

_NODE_IDS = {
    NodeKind.TOP_QUANTITATIVE: "G-top",
    NodeKind.TARGET_DERIVATION: "C-target",
    NodeKind.TESTING_ESTIMATE: "C-testing",
    NodeKind.SCOPE_COMPLIANCE: "C-scope",
    NodeKind.SRF_DETECTION: "C-detect-srf",
    NodeKind.OOS_DETECTION: "C-detect-oos",
    NodeKind.DATA_UNSEEN: "C-data-unseen",
    NodeKind.DATA_REPRESENTATIVE: "C-data-representative",
    NodeKind.DATA_LABELS_CORRECT: "C-data-labels",
}


class NodeStatus(Enum):
    SATISFIED = "satisfied"
    UNSATISFIED = "unsatisfied"
    ASSUMED_ONLY = "assumed_only"
    MISSING_EVIDENCE = "missing_evidence"


_STATUS_COLOR = {
    NodeStatus.SATISFIED: "green",
    NodeStatus.UNSATISFIED: "red",
    NodeStatus.ASSUMED_ONLY: "yellow",
    NodeStatus.MISSING_EVIDENCE: "gray",
}


@dataclass(frozen=True)
class ArgumentNode:
    id: str
    claim: str
    kind: NodeKind
    status: NodeStatus
    children: tuple["ArgumentNode", ...] = ()
    evidence_refs: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()
    warning_count: int = 0  # set on the root by propagate_status


def _leaf(
    kind: NodeKind,
    claim: str,
    status: NodeStatus,
    evidence_refs: tuple[str, ...] = (),
    notes: tuple[str, ...] = (),
) -> ArgumentNode:
    return ArgumentNode(
        id=_NODE_IDS[kind],
        claim=claim,
        kind=kind,
        status=status,
        evidence_refs=evidence_refs,
        notes=notes,
    )


def build_tree(bundle: CaseBundle, report: BoundReport) -> ArgumentNode:
    """Assemble the claim tree with leaf statuses derived from the bundle.

    The root status mirrors the report verdict provisionally; run
    propagate_status afterwards to fold leaf statuses and the warning
    count into it.
    """
    children: list[ArgumentNode] = []

    children.append(
        _leaf(
            NodeKind.TARGET_DERIVATION,
            "The quantitative target was appropriately derived from the "
            "system-level safety requirement",
            NodeStatus.ASSUMED_ONLY,
            notes=("the target pair is an input to this tool and is not re-derived here",),
        )
    )

    te = bundle.test
    children.append(
        _leaf(
            NodeKind.TESTING_ESTIMATE,
            "Statistical testing bounds the in-scope safety-related failure rate",
            NodeStatus.SATISFIED,
            evidence_refs=(f"testing campaign: {te.failures} failures in {te.samples} samples",),
        )
    )

    if bundle.scope is not None:
        sc = bundle.scope
        if sc.point is not None:
            ref = f"scope estimate ({sc.provenance.value}): p_oos = {sc.point!r}"
        else:
            ref = (
                f"scope profile ({sc.provenance.value}): {len(sc.profile)} points, "
                f"evaluated at mission time"
            )
        children.append(
            _leaf(
                NodeKind.SCOPE_COMPLIANCE,
                "The probability of operating outside the intended scope is bounded",
                NodeStatus.SATISFIED,
                evidence_refs=(ref,),
            )
        )
    elif bundle.closed_scope:
        children.append(
            _leaf(
                NodeKind.SCOPE_COMPLIANCE,
                "The probability of operating outside the intended scope is bounded",
                NodeStatus.ASSUMED_ONLY,
                notes=("closed scope assumed by declaration; p_oos taken as 0",),
            )
        )
    else:
        children.append(
            _leaf(
                NodeKind.SCOPE_COMPLIANCE,
                "The probability of operating outside the intended scope is bounded",
                NodeStatus.MISSING_EVIDENCE,
            )
        )

    det = bundle.detect_srf
    if det is not None:
        if det.campaign is not None:
            d, t = det.campaign
            ref = f"failure-detection campaign: {d} of {t} detected"
        else:
            ref = f"failure-detection estimate ({det.provenance.value}): {det.point!r}"
        children.append(
            _leaf(
                NodeKind.SRF_DETECTION,
                "Runtime detection flags safety-related failures with at least "
                "the credited efficacy",
                NodeStatus.SATISFIED,
                evidence_refs=(ref,),
            )
        )
    else:
        children.append(
            _leaf(
                NodeKind.SRF_DETECTION,
                "Runtime detection flags safety-related failures with at least "
                "the credited efficacy",
                NodeStatus.MISSING_EVIDENCE,
                notes=("no credit taken",),
            )
        )

    if bundle.detect_oos is not None:
        doos = bundle.detect_oos
        children.append(
            _leaf(
                NodeKind.OOS_DETECTION,
                "Out-of-scope operation is detected with at least the credited efficacy",
                NodeStatus.SATISFIED,
                evidence_refs=(
                    f"out-of-scope detection estimate ({doos.provenance.value}): "
                    f"{doos.point!r}",
                ),
            )
        )
    else:
        children.append(
            _leaf(
                NodeKind.OOS_DETECTION,
                "Out-of-scope operation is detected with at least the credited efficacy",
                NodeStatus.MISSING_EVIDENCE,
                notes=("no credit taken",),
            )
        )

    unseen = DATASET_UNSEEN_ASSUMPTION in bundle.assumptions
    children.append(
        _leaf(
            NodeKind.DATA_UNSEEN,
            "The test dataset was not used to train or tune the model",
            NodeStatus.ASSUMED_ONLY if unseen else NodeStatus.MISSING_EVIDENCE,
            notes=(f'declared assumption "{DATASET_UNSEEN_ASSUMPTION}"',) if unseen else (),
        )
    )

    representative = DATASET_REPRESENTATIVE_ASSUMPTION in bundle.assumptions
    children.append(
        _leaf(
            NodeKind.DATA_REPRESENTATIVE,
            "The test dataset is representative of the intended application scope",
            NodeStatus.ASSUMED_ONLY if representative else NodeStatus.MISSING_EVIDENCE,
            notes=(f'declared assumption "{DATASET_REPRESENTATIVE_ASSUMPTION}"',)
            if representative
            else (),
        )
    )

    root_notes: list[str] = []
    if bundle.labels is not None:
        lq = bundle.labels
        if lq.audit is not None:
            d, a = lq.audit
            children.append(
                _leaf(
                    NodeKind.DATA_LABELS_CORRECT,
                    "Test labels correctly capture the intended outcomes",
                    NodeStatus.SATISFIED,
                    evidence_refs=(f"label audit: {d} disagreements in {a} relabelled samples",),
                )
            )
        else:
            children.append(
                _leaf(
                    NodeKind.DATA_LABELS_CORRECT,
                    "Test labels correctly capture the intended outcomes",
                    NodeStatus.ASSUMED_ONLY,
                    notes=(f"label-fault rate declared as {lq.rate!r} without an audit",),
                )
            )
    else:
        children.append(
            _leaf(
                NodeKind.DATA_LABELS_CORRECT,
                "Test labels correctly capture the intended outcomes",
                NodeStatus.MISSING_EVIDENCE,
            )
        )
        root_notes.append("label-fault rate assumed to be 0: no label-quality evidence declared")

    children.sort(key=lambda node: _CHILD_ORDER.index(node.kind))
    satisfied = report.verdict is Verdict.SATISFIED
    return ArgumentNode(
        id=_NODE_IDS[NodeKind.TOP_QUANTITATIVE],
        claim=(
            "The probability of an unflagged safety-related failure does not exceed "
            f"{report.p_target!r} at confidence {bundle.target.cl!r}"
        ),
        kind=NodeKind.TOP_QUANTITATIVE,
        status=NodeStatus.SATISFIED if satisfied else NodeStatus.UNSATISFIED,
        children=tuple(children),
        notes=tuple(root_notes),
    )


def propagate_status(root: ArgumentNode) -> ArgumentNode:
    """Fold leaf statuses into the root.

    The root stays SATISFIED only if its provisional status (the report
    verdict) is satisfied, no leaf is UNSATISFIED, and the testing claim
    is not missing its evidence. Every ASSUMED_ONLY or MISSING_EVIDENCE
    leaf counts as one warning; leaves themselves are never changed.
    """
    leaves = root.children
    blocked = any(child.status is NodeStatus.UNSATISFIED for child in leaves) or any(
        child.kind is NodeKind.TESTING_ESTIMATE
        and child.status is NodeStatus.MISSING_EVIDENCE
        for child in leaves
    )
    warnings = sum(
        1
        for child in leaves
        if child.status in (NodeStatus.ASSUMED_ONLY, NodeStatus.MISSING_EVIDENCE)
    )
    status = root.status
    if status is NodeStatus.SATISFIED and blocked:
        status = NodeStatus.UNSATISFIED
    return replace(root, status=status, warning_count=warnings)


def _dot_escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(root: ArgumentNode) -> str:
    """Emit the tree as Graphviz DOT, deterministically.

    One node per claim with the status as both label suffix and fill
    colour; edges run parent to child in fixed kind order.
    """
    lines = ["digraph assurance_case {"]
    order: list[ArgumentNode] = []

    def visit(node: ArgumentNode) -> None:
        order.append(node)
        for child in node.children:
            visit(child)

    visit(root)
    for node in order:
        # \n inside a DOT label string is Graphviz's line-break escape
        label = "\\n".join(
            (_dot_escape(node.id), _dot_escape(node.claim), f"[{node.status.value}]")
        )
        color = _STATUS_COLOR[node.status]
        lines.append(
            f'  "{_dot_escape(node.id)}" [shape=box, style=filled, '
            f'fillcolor="{color}", label="{label}"];'
        )
    for node in order:
        for child in node.children:
            lines.append(f'  "{_dot_escape(node.id)}" -> "{_dot_escape(child.id)}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _node_to_dict(node: ArgumentNode) -> dict:
    data = {
        "id": node.id,
        "claim": node.claim,
        "kind": node.kind.value,
        "status": node.status.value,
        "evidence_refs": list(node.evidence_refs),
        "notes": list(node.notes),
        "children": [_node_to_dict(child) for child in node.children],
    }
    if node.kind is NodeKind.TOP_QUANTITATIVE:
        data["warning_count"] = node.warning_count
    return data


def export_json(root: ArgumentNode, report: BoundReport | None = None) -> str:
    """Lossless JSON rendering with stable (sorted) key order.

    When a report is supplied its term breakdown is embedded at the root
    under "report".
    """
    data = _node_to_dict(root)
    if report is not None:
        data["report"] = {
            "case": str(report.case),
            "verdict": report.verdict.value,
            "p_safe_upper": report.p_safe_upper,
            "p_safe_upper_raw": report.p_safe_upper_raw,
            "p_target": report.p_target,
            "margin": report.margin,
            "terms": {
                "test_term": report.terms.test_term,
                "label_penalty": report.terms.label_penalty,
                "srf_detect_credit": report.terms.srf_detect_credit,
                "scope_term": report.terms.scope_term,
                "oos_detect_credit": report.terms.oos_detect_credit,
            },
        }
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _node_from_dict(data: dict) -> ArgumentNode:
    return ArgumentNode(
        id=data["id"],
        claim=data["claim"],
        kind=NodeKind(data["kind"]),
        status=NodeStatus(data["status"]),
        children=tuple(_node_from_dict(child) for child in data["children"]),
        evidence_refs=tuple(data["evidence_refs"]),
        notes=tuple(data["notes"]),
        warning_count=data.get("warning_count", 0),
    )


def tree_from_json(text: str) -> ArgumentNode:
    """Rebuild an ArgumentNode tree from its JSON export."""
    return _node_from_dict(json.loads(text))
