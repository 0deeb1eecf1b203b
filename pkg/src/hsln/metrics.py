"""Per-label precision/recall/F1, support-weighted F1 and confusion matrices.

The confusion matrix is indexed ``[predicted, true]``: rows are predicted
labels and column sums are the gold supports.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError


@dataclass(frozen=True)
class LabelScore:
    label: str
    precision: float
    recall: float
    f1: float
    support: int
    zero_division: bool = False


@dataclass(frozen=True)
class EvalReport:
    per_label: tuple
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    confusion: np.ndarray
    labels: tuple

    @property
    def total(self):
        return int(self.confusion.sum())

    @property
    def accuracy(self):
        return float(np.trace(self.confusion) / self.total) if self.total else 0.0

    @property
    def zero_support(self):
        return [s.label for s in self.per_label if s.support == 0]


def _ratio(num, den):
    return (num / den, False) if den else (0.0, True)


def weighted_average(values, supports):
    """Support-weighted mean; zero-support entries get no weight."""
    values = np.asarray(values, dtype=np.float64)
    supports = np.asarray(supports, dtype=np.float64)
    total = supports.sum()
    return float((values * supports).sum() / total) if total else 0.0


def confusion_matrix(pred_paths, gold_paths, n_labels):
    if len(pred_paths) != len(gold_paths):
        raise ContractError(f"{len(pred_paths)} predicted paths for {len(gold_paths)} gold paths")
    cm = np.zeros((n_labels, n_labels), dtype=np.int64)
    for k, (p, g) in enumerate(zip(pred_paths, gold_paths)):
        if len(p) != len(g):
            raise ContractError(f"abstract {k}: {len(p)} predictions for {len(g)} gold labels")
        np.add.at(cm, (np.asarray(p, dtype=np.int64), np.asarray(g, dtype=np.int64)), 1)
    return cm


def report_from_confusion(cm, labels):
    per_label = []
    for c, name in enumerate(labels):
        tp = int(cm[c, c])
        support = int(cm[:, c].sum())
        precision, pz = _ratio(tp, int(cm[c, :].sum()))
        recall, rz = _ratio(tp, support)
        f1, fz = _ratio(2 * precision * recall, precision + recall)
        per_label.append(LabelScore(name, precision, recall, f1, support, pz or rz or fz))
    supports = [s.support for s in per_label]
    return EvalReport(
        tuple(per_label),
        weighted_average([s.precision for s in per_label], supports),
        weighted_average([s.recall for s in per_label], supports),
        weighted_average([s.f1 for s in per_label], supports),
        cm, tuple(labels))


def evaluate(pred_paths, gold_paths, label_set):
    """Score predicted label paths against gold paths (index aligned)."""
    labels = tuple(label_set)
    return report_from_confusion(confusion_matrix(pred_paths, gold_paths, len(labels)), labels)


def initials(labels):
    """Shortest distinct prefixes, e.g. BACKGROUND -> B, OUTCOME/OTHER -> OU/OT."""
    for k in range(1, max(len(x) for x in labels) + 1):
        short = [x[:k] for x in labels]
        if len(set(short)) == len(short):
            return short
    return list(labels)


def format_report(report):
    """Fixed-width table (percentages, one decimal) followed by the confusion matrix."""
    width = max(14, max(len(x) for x in report.labels) + 2)
    lines = ["label".ljust(width) + f"{'P':>8}{'R':>8}{'F1':>8}{'support':>10}"]
    for s in report.per_label:
        flag = " *" if s.support == 0 or s.zero_division else ""
        lines.append(s.label.ljust(width) + f"{100 * s.precision:8.1f}{100 * s.recall:8.1f}"
                     f"{100 * s.f1:8.1f}{s.support:10d}{flag}")
    lines.append("weighted".ljust(width) + f"{100 * report.weighted_precision:8.1f}"
                 f"{100 * report.weighted_recall:8.1f}{100 * report.weighted_f1:8.1f}"
                 f"{report.total:10d}")
    if any(s.support == 0 or s.zero_division for s in report.per_label):
        lines.append("* zero support or zero division (scored 0, excluded from weights if unsupported)")
    lines.append("")
    lines.append("confusion (rows = predicted, columns = true)")
    short = initials(report.labels)
    cell = max(7, len(str(report.confusion.max())) + 2, max(len(s) for s in short) + 2)
    lines.append(" " * cell + "".join(s.rjust(cell) for s in short))
    for s, row in zip(short, report.confusion):
        lines.append(s.ljust(cell) + "".join(str(int(v)).rjust(cell) for v in row))
    return "\n".join(lines) + "\n"


def parse_report(text):
    """Read back :func:`format_report` output.

    Returns ``{"per_label": {label: (P, R, F1, support)}, "weighted": (P, R, F1, total),
    "confusion": ndarray}`` with percentages as printed.
    """
    lines = text.splitlines()
    per_label, weighted = {}, None
    i = 1
    while lines[i].strip():
        parts = lines[i].split()
        if parts[0].startswith("*"):
            i += 1
            continue
        if parts[-1] == "*":
            parts = parts[:-1]
        name = " ".join(parts[:-4])
        values = (float(parts[-4]), float(parts[-3]), float(parts[-2]), int(parts[-1]))
        if name == "weighted":
            weighted = values
        else:
            per_label[name] = values
        i += 1
    rows = [ln.split()[1:] for ln in lines[i + 3:] if ln.strip()]
    return {"per_label": per_label, "weighted": weighted,
            "confusion": np.array(rows, dtype=np.int64)}


def metrics_block(report):
    """Flat ``key=value`` lines for machine consumption."""
    out = [f"weighted_f1={report.weighted_f1:.6f}",
           f"weighted_precision={report.weighted_precision:.6f}",
           f"weighted_recall={report.weighted_recall:.6f}",
           f"accuracy={report.accuracy:.6f}",
           f"sentences={report.total}"]
    for s in report.per_label:
        out += [f"precision.{s.label}={s.precision:.6f}", f"recall.{s.label}={s.recall:.6f}",
                f"f1.{s.label}={s.f1:.6f}", f"support.{s.label}={s.support}"]
    for i, p in enumerate(report.labels):
        out.append(f"confusion.{p}=" + ",".join(str(int(v)) for v in report.confusion[i]))
    return "\n".join(out) + "\n"


def parse_metrics_block(text):
    out = {}
    for line in text.splitlines():
        if line.strip():
            key, value = line.split("=", 1)
            out[key] = value
    return out
