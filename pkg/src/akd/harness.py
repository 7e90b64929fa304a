"""Experiment runner: trains teacher/student variants, logs metrics, compares methods.

One run = one (dataset, method, seed) triple. Each run derives independent
RNG streams from its seed so that, for example, swapping the method never
shifts the student's initialization or the batch order.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .alpha import AlphaTrace, DynamicPolicy, FixedPolicy, LearnablePolicy, prob_discrepancy
from .cam import cam_attention, cam_reweight, init_cam
from .config import METHODS, ExperimentConfig, validate_for_compare, validate_for_run
from .data import load_delimited, make_blobs, make_rings, standardize
from .errors import AkdError, ConfigError, ParameterError
from .losses import combine, cross_entropy, kd_kl
from .metrics import HEADER, MetricsRow
from .models import MlpModel, make_optimizer, train_teacher
from .tensor import Graph, ProbBatch, Tensor, softmax_values


@dataclass
class Streams:
    data: np.random.Generator
    teacher_init: np.random.Generator
    teacher_shuffle: np.random.Generator
    student_init: np.random.Generator
    cam_init: np.random.Generator
    shuffle: np.random.Generator


def derive_streams(seed: int) -> Streams:
    children = np.random.SeedSequence(seed).spawn(6)
    return Streams(*(np.random.Generator(np.random.PCG64(c)) for c in children))


def build_dataset(cfg: ExperimentConfig):
    seed = cfg.dataset_seed if cfg.dataset_seed is not None else cfg.seed
    if cfg.dataset == "blobs":
        ds = make_blobs(cfg.dataset_n, cfg.dataset_classes, cfg.dataset_features, cfg.dataset_spread, seed)
    elif cfg.dataset == "rings":
        ds = make_rings(cfg.dataset_n, cfg.dataset_classes, cfg.dataset_noise, seed)
    elif cfg.dataset == "delimited":
        ds = load_delimited(
            cfg.dataset_path,
            cfg.dataset_label_column,
            delimiter=cfg.dataset_delimiter,
            has_header=cfg.dataset_has_header,
            seed=seed,
        )
    else:
        raise ConfigError(f"unknown dataset {cfg.dataset!r}")
    if cfg.dataset_standardize:
        ds = standardize(ds)
    return ds


def resolve_widths(cfg: ExperimentConfig, dataset):
    teacher = cfg.teacher_widths or (dataset.d, 256, 256, dataset.classes)
    student = cfg.student_widths or (dataset.d, 32, dataset.classes)
    for name, widths in (("teacher", teacher), ("student", student)):
        if len(widths) < 2:
            raise ConfigError(f"{name}.widths needs at least input and output, got {widths}")
        if widths[0] != dataset.d:
            raise ConfigError(f"{name}.widths starts at {widths[0]}, dataset has {dataset.d} features")
        if widths[-1] != dataset.classes:
            raise ConfigError(f"{name}.widths ends at {widths[-1]}, dataset has {dataset.classes} classes")
    return tuple(teacher), tuple(student)


def teacher_checkpoint_path(cfg: ExperimentConfig) -> str:
    if cfg.teacher_checkpoint is not None:
        return cfg.teacher_checkpoint
    return os.path.join(cfg.out, f"teacher_seed{cfg.seed}.ckpt")


def ensure_teacher(cfg: ExperimentConfig, dataset, streams: Streams) -> MlpModel:
    """Load the teacher checkpoint, or train and persist it when allowed."""
    path = teacher_checkpoint_path(cfg)
    if os.path.exists(path):
        return MlpModel.load(path, requires_grad=False)
    if not cfg.train_teacher:
        raise FileNotFoundError(f"teacher checkpoint {path} is missing and train_teacher is false")
    teacher_widths, _ = resolve_widths(cfg, dataset)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    model, _ = train_teacher(
        dataset,
        teacher_widths,
        epochs=cfg.teacher_epochs,
        batch_size=cfg.batch_size,
        optimizer_spec=_optimizer_spec(cfg),
        init_rng=streams.teacher_init,
        shuffle_rng=streams.teacher_shuffle,
        checkpoint_path=path,
    )
    return model


def _optimizer_spec(cfg: ExperimentConfig) -> dict:
    return {
        "kind": cfg.optimizer,
        "lr": cfg.lr,
        "momentum": cfg.momentum,
        "beta1": cfg.beta1,
        "beta2": cfg.beta2,
        "eps": cfg.adam_eps,
    }


def build_policy(cfg: ExperimentConfig):
    kind = cfg.cam_alpha_policy if cfg.method == "dynamic+cam" else cfg.method
    if kind == "fixed":
        return FixedPolicy(cfg.alpha0)
    if kind == "learnable":
        return LearnablePolicy(cfg.theta0)
    if kind == "dynamic":
        return DynamicPolicy(cfg.k, cfg.sign_flip)
    raise ConfigError(f"unknown alpha policy {kind!r}")


def _method_loss(g, cfg, policy, cam_params, student_logits, teacher_logits, labels):
    """Shared loss construction for train and val passes.

    Every method routes its distillation target through the same reweighting
    arithmetic: unit attention for the plain paths, the attention MLP when it
    is active. Unit attention is a renormalization that shifts the target by
    at most a few ulps, and it keeps the plain and zero-initialized-attention
    paths on bitwise-identical float operations.
    """
    t = cfg.temperature
    ce = cross_entropy(g, student_logits, labels)
    p_t_vals = softmax_values(teacher_logits, t)
    p_s_vals = softmax_values(student_logits.values, t)
    dist = prob_discrepancy(p_s_vals, p_t_vals)
    p_t = ProbBatch(Tensor(p_t_vals), t)
    if cam_params is not None:
        attention = cam_attention(g, cam_params, ProbBatch(Tensor(p_s_vals), t), p_t)
    else:
        attention = Tensor(np.ones(p_t_vals.shape))
    target = cam_reweight(g, attention, p_t)
    kd = kd_kl(g, student_logits, target, t)
    alpha_col, _ = policy.alpha_column(g, len(labels), dist)
    return combine(g, ce, kd, alpha_col, t), dist


@dataclass
class _EpochStats:
    ce_sum: float = 0.0
    kd_sum: float = 0.0
    total_sum: float = 0.0
    correct: int = 0
    count: int = 0
    alphas: list = field(default_factory=list)
    dists: list = field(default_factory=list)

    def add(self, breakdown, dist, logits_values, labels):
        b = len(labels)
        self.ce_sum += float(breakdown.ce_per_sample.sum())
        self.kd_sum += float(breakdown.kd_per_sample.sum())
        self.total_sum += float(breakdown.total.item()) * b
        self.correct += int(np.sum(np.argmax(logits_values, axis=1) == labels))
        self.count += b
        self.alphas.append(breakdown.alpha_used)
        self.dists.append(dist)

    def row(self, epoch: int, split: str) -> MetricsRow:
        alphas = np.concatenate(self.alphas)
        dists = np.concatenate(self.dists)
        return MetricsRow(
            epoch=epoch,
            split=split,
            ce_loss=self.ce_sum / self.count,
            kd_loss=self.kd_sum / self.count,
            total_loss=self.total_sum / self.count,
            accuracy=self.correct / self.count,
            alpha_mean=float(np.mean(alphas)),
            alpha_std=float(np.std(alphas)),
            dist_mean=float(np.mean(dists)),
        )


@dataclass
class RunResult:
    rows: list
    metrics_path: str
    student_checkpoint: str
    final_val_accuracy: float
    alpha_trace: AlphaTrace
    teacher_checkpoint: str


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    """Train one student variant, streaming one train and one val row per epoch.

    The metrics CSV is flushed after every epoch so an interrupted run still
    leaves an analyzable prefix.
    """
    validate_for_run(cfg)
    streams = derive_streams(cfg.seed)
    dataset = build_dataset(cfg)
    _, student_widths = resolve_widths(cfg, dataset)
    os.makedirs(cfg.out, exist_ok=True)

    teacher = ensure_teacher(cfg, dataset, streams)
    student = MlpModel.initialize(student_widths, streams.student_init)
    policy = build_policy(cfg)
    cam_params = None
    if cfg.method == "dynamic+cam":
        cam_params = init_cam(
            dataset.classes,
            streams.cam_init,
            hidden_multiplier=cfg.cam_hidden_multiplier,
            zero_init_output=cfg.cam_zero_init_output,
        )
    params = student.params() + policy.params()
    if cam_params is not None:
        params += cam_params.params()
    opt = make_optimizer(params=params, **_optimizer_spec(cfg))

    x_tr, y_tr = dataset.train_features, dataset.train_labels
    x_val, y_val = dataset.val_features, dataset.val_labels
    n_tr = x_tr.shape[0]

    metrics_path = os.path.join(cfg.out, f"metrics_{cfg.method}_{cfg.seed}.csv")
    trace = AlphaTrace()
    rows = []
    step = 0
    with open(metrics_path, "w") as fh:
        fh.write(HEADER + "\n")
        fh.flush()
        for epoch in range(1, cfg.epochs + 1):
            train_stats = _EpochStats()
            perm = streams.shuffle.permutation(n_tr)
            for start in range(0, n_tr, cfg.batch_size):
                idx = perm[start : start + cfg.batch_size]
                g = Graph()
                logits = student.forward(g, Tensor(x_tr[idx]))
                teacher_logits = teacher.forward_values(x_tr[idx])
                breakdown, dist = _method_loss(g, cfg, policy, cam_params, logits, teacher_logits, y_tr[idx])
                g.backward(breakdown.total)
                opt.step()
                opt.zero_grads()
                train_stats.add(breakdown, dist, logits.values, y_tr[idx])
                step += 1
                trace.append(step, breakdown.alpha_used, dist)

            val_stats = _EpochStats()
            g = Graph()
            logits = student.forward(g, Tensor(x_val))
            teacher_logits = teacher.forward_values(x_val)
            breakdown, dist = _method_loss(g, cfg, policy, cam_params, logits, teacher_logits, y_val)
            val_stats.add(breakdown, dist, logits.values, y_val)

            for row in (train_stats.row(epoch, "train"), val_stats.row(epoch, "val")):
                rows.append(row)
                fh.write(row.to_csv_line() + "\n")
            fh.flush()

    student_path = os.path.join(cfg.out, f"student_{cfg.method}_seed{cfg.seed}.ckpt")
    student.save(student_path)
    return RunResult(
        rows=rows,
        metrics_path=metrics_path,
        student_checkpoint=student_path,
        final_val_accuracy=rows[-1].accuracy,
        alpha_trace=trace,
        teacher_checkpoint=teacher_checkpoint_path(cfg),
    )


@dataclass
class ComparisonReport:
    methods: tuple
    seeds: tuple
    accuracies: dict
    digest: str
    dataset: str
    alpha_pairing: str

    def mean(self, method: str) -> float:
        return float(np.mean(self.accuracies[method]))

    def std(self, method: str) -> float:
        return float(np.std(self.accuracies[method], ddof=1))

    def reference_order(self) -> tuple:
        return tuple(m for m in METHODS if m in self.methods)

    def matches_reference(self) -> bool:
        ref = self.reference_order()
        means = [self.mean(m) for m in ref]
        return all(a < b for a, b in zip(means, means[1:]))

    def render_text(self) -> str:
        lines = [
            "Student accuracy comparison (desk scale)",
            f"dataset: {self.dataset}",
            f"seeds: {','.join(str(s) for s in self.seeds)}",
            f"config digest: sha256:{self.digest}",
            "",
            f"{'method':<14}final val accuracy (mean +/- std over seeds)",
        ]
        for m in self.reference_order():
            lines.append(f"{m:<14}{self.mean(m):.4f} +/- {self.std(m):.4f}")
        observed = " < ".join(sorted(self.reference_order(), key=self.mean))
        ref = " < ".join(self.reference_order())
        verdict = "MATCHED" if self.matches_reference() else "NOT MATCHED"
        lines += [
            "",
            f"observed ordering (ascending mean accuracy): {observed}",
            f"reference ordering ({ref}): {verdict}",
            "note: absolute accuracies are desk-scale observations, not reproduction targets.",
        ]
        if "dynamic+cam" in self.methods:
            lines.append(f"note: dynamic+cam pairs attention reweighting with the {self.alpha_pairing} alpha policy.")
        return "\n".join(lines) + "\n"

    def render_csv(self) -> str:
        header = ["method", "acc_mean", "acc_std"] + [f"acc_seed_{s}" for s in self.seeds]
        lines = [",".join(header)]
        for m in self.reference_order():
            cells = [m, repr(self.mean(m)), repr(self.std(m))]
            cells += [repr(float(a)) for a in self.accuracies[m]]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def _dataset_descriptor(cfg: ExperimentConfig) -> str:
    if cfg.dataset == "blobs":
        return (
            f"blobs(n={cfg.dataset_n}, classes={cfg.dataset_classes}, "
            f"features={cfg.dataset_features}, spread={cfg.dataset_spread}), one draw per seed"
        )
    if cfg.dataset == "rings":
        return f"rings(n={cfg.dataset_n}, classes={cfg.dataset_classes}, noise={cfg.dataset_noise}), one draw per seed"
    return f"delimited(path={cfg.dataset_path})"


def _run_pair(cfg: ExperimentConfig, method: str, seed: int) -> float:
    result = run_experiment(cfg.with_overrides(method=method, seed=seed))
    return result.final_val_accuracy


def compare_methods(cfg: ExperimentConfig, jobs: int = 1) -> ComparisonReport:
    """Run every (method, seed) pair and aggregate final val accuracy.

    Teachers are trained once per seed and shared read-only by all methods,
    so every method sees identical datasets, teachers, and RNG streams.
    """
    validate_for_compare(cfg)
    if jobs < 1:
        raise ParameterError(f"jobs must be at least 1, got {jobs}")
    ordered = tuple(m for m in METHODS if m in cfg.methods)
    seeds = tuple(cfg.seeds)

    for seed in seeds:
        seeded = cfg.with_overrides(seed=seed)
        streams = derive_streams(seed)
        dataset = build_dataset(seeded)
        ensure_teacher(seeded, dataset, streams)

    pairs = [(m, s) for m in ordered for s in seeds]
    results: dict = {}
    if jobs == 1:
        for method, seed in pairs:
            try:
                results[(method, seed)] = _run_pair(cfg, method, seed)
            except Exception as exc:
                raise AkdError(f"comparison run failed for method={method} seed={seed}: {exc}") from exc
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(_run_pair, cfg, m, s): (m, s) for m, s in pairs}
            for future, (method, seed) in futures.items():
                try:
                    results[(method, seed)] = future.result()
                except Exception as exc:
                    raise AkdError(f"comparison run failed for method={method} seed={seed}: {exc}") from exc

    accuracies = {m: [results[(m, s)] for s in seeds] for m in ordered}
    report = ComparisonReport(
        methods=ordered,
        seeds=seeds,
        accuracies=accuracies,
        digest=cfg.digest(),
        dataset=_dataset_descriptor(cfg),
        alpha_pairing=cfg.cam_alpha_policy,
    )
    os.makedirs(cfg.out, exist_ok=True)
    with open(os.path.join(cfg.out, "report.txt"), "w") as fh:
        fh.write(report.render_text())
    with open(os.path.join(cfg.out, "report.csv"), "w") as fh:
        fh.write(report.render_csv())
    return report
