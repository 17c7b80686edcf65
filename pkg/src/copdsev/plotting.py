"""Report figures: confusion matrices, ROC curves, k search, feature importance."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

DISPLAY_NAMES = {"random_forest": "Random Forest", "knn": "KNN", "svm": "SVM"}
CLASS_NAMES = ("Mild-moderate", "Severe")

STYLE = {
    "font.size": 10,
    "axes.titlesize": 11,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
    "svg.hashsalt": "copdsev",
}


def _name(kind, extra=None):
    if kind == "knn" and extra and extra.get("selected_k"):
        return f"KNN (k={extra['selected_k']})"
    return DISPLAY_NAMES.get(kind, kind)


def _save(fig, path):
    fig.savefig(path, metadata={"Software": None} if path.endswith(".png") else None)
    plt.close(fig)
    return path


def plot_confusion_matrices(docs, path):
    """One heatmap per classifier from summed fold confusion counts.

    ``docs`` are metrics.json documents (dicts).
    """
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(docs), figsize=(3.6 * len(docs), 3.4), squeeze=False)
        for ax, doc in zip(axes[0], docs):
            c = doc["confusion"]
            cm = np.array([[c["tn"], c["fp"]], [c["fn"], c["tp"]]])
            ax.imshow(cm, cmap="Blues")
            for (i, j), v in np.ndenumerate(cm):
                ax.text(j, i, str(v), ha="center", va="center", color="white" if v > cm.max() / 2 else "black")
            ax.set_xticks([0, 1], CLASS_NAMES)
            ax.set_yticks([0, 1], CLASS_NAMES)
            ax.set_xlabel("Predicted")
            ax.set_ylabel("True")
            ax.set_title(_name(doc["classifier"], doc.get("extra")))
        fig.tight_layout()
        return _save(fig, path)


def plot_roc_curves(curves, docs, path):
    """Per-fold ROC curves (thin) and the fold-averaged curve (thick) per classifier.

    ``curves`` maps classifier kind to a list of ``(fpr, tpr)`` array pairs.
    """
    grid = np.linspace(0.0, 1.0, 201)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 5))
        for color, doc in zip(plt.rcParams["axes.prop_cycle"].by_key()["color"], docs):
            kind = doc["classifier"]
            interp = []
            for fpr, tpr in curves[kind]:
                ax.plot(fpr, tpr, color=color, lw=0.6, alpha=0.35)
                interp.append(np.interp(grid, fpr, tpr))
            auc = doc["metrics"]["roc_auc"]
            label = f"{_name(kind, doc.get('extra'))} (AUC {auc['mean']:.4f} ± {auc['std']:.4f})"
            ax.plot(grid, np.mean(interp, axis=0), color=color, lw=2, label=label)
        ax.plot([0, 1], [0, 1], ls="--", color="grey", lw=1)
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.01)
        ax.set_xlabel("False positive rate")
        ax.set_ylabel("True positive rate")
        ax.legend(loc="lower right")
        return _save(fig, path)


def plot_k_search(k_accuracy, selected_k, path):
    ks = sorted(int(k) for k in k_accuracy)
    acc = [k_accuracy[str(k)] if str(k) in k_accuracy else k_accuracy[k] for k in ks]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 3.2))
        ax.plot(ks, acc, marker="o", ms=3)
        ax.axvline(selected_k, color="grey", ls=":", lw=1)
        ax.set_xticks(ks)
        ax.set_xlabel("k")
        ax.set_ylabel("Mean CV accuracy")
        return _save(fig, path)


def plot_feature_importance(importances, path):
    names = list(importances)
    vals = np.array([importances[n] for n in names])
    order = np.argsort(vals)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 3.4))
        ax.barh(np.array(names)[order], vals[order])
        ax.set_xlabel("Mean impurity decrease (normalized)")
        return _save(fig, path)
