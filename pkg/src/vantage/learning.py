"""Two-view max-margin learning on image and geometry feature blocks.

Both machines are kernel SVMs expanded in representer form
(w = sum_i alpha_i k(x_i, .)). The joint program couples their outputs
with an epsilon-insensitive disagreement penalty:

    min  0.5 aV'KV aV + 0.5 aG'KG aG
         + C_V sum hinge(1 - y fV) + C_G sum hinge(1 - y fG)
         + D   sum max(0, |fV - fG| - eps)

with fV = KV aV + bV, fG = KG aG + bG. The objective is convex; solving
uses a quadratically smoothed hinge and a softened absolute value
(smoothing mu), minimized by a damped Newton method with mu-continuation.
The result is deterministic and is validated against a dense QP oracle in
the test suite.

With D = 0 the coupling term vanishes and the program decouples into two
independent SVMs, which is also how the single-view trainer is checked.

The decision rule averages the two machines: f(x) = 0.5 (fV + fG);
h(x) = sign(f) with the tie f = 0 mapped to +1; the soft score is the
logistic sigmoid of f.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, asdict

import numpy as np

from .errors import ConvergenceError

DEFAULT_EPS = 0.01
DEFAULT_C_V = 4.0
DEFAULT_C_G = 4.0
DEFAULT_D = 0.1

_MU_SCHEDULE = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
_RIDGE = 1e-10  # kernel jitter for numerical PD


# ---------------------------------------------------------------------------
# Kernels and standardization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelSpec:
    gamma: float
    kind: str = "rbf"

    def __post_init__(self):
        if self.kind != "rbf":
            raise ValueError(f"unsupported kernel kind {self.kind!r}")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")


def gram(spec: KernelSpec, A, B):
    """RBF Gram matrix exp(-gamma * ||a - b||^2)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    sq = (
        (A * A).sum(axis=1)[:, None]
        + (B * B).sum(axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    return np.exp(-spec.gamma * np.maximum(sq, 0.0))


def median_heuristic_gamma(X):
    """1 / median squared pairwise distance (1.0 on degenerate input)."""
    X = np.asarray(X, dtype=float)
    n = len(X)
    if n < 2:
        return 1.0
    sq = (
        (X * X).sum(axis=1)[:, None]
        + (X * X).sum(axis=1)[None, :]
        - 2.0 * (X @ X.T)
    )
    vals = sq[np.triu_indices(n, k=1)]
    med = float(np.median(vals))
    return 1.0 / med if med > 1e-12 else 1.0


@dataclass
class Standardizer:
    """Per-dimension z-scoring with degenerate dimensions dropped."""

    mean: np.ndarray
    std: np.ndarray
    keep: np.ndarray

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=float)
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        keep = std > 1e-12
        return cls(mean, np.where(keep, std, 1.0), keep)

    def transform(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return ((X - self.mean) / self.std)[:, self.keep]


@dataclass
class Dataset:
    """Labeled two-view samples: image block (91) and geometry block (24)."""

    ids: list
    X_image: np.ndarray
    X_geometry: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X_image = np.asarray(self.X_image, dtype=float)
        self.X_geometry = np.asarray(self.X_geometry, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        n = len(self.ids)
        if not (len(self.X_image) == len(self.X_geometry) == len(self.y) == n):
            raise ValueError("dataset blocks must align")
        if not np.all(np.isin(self.y, (-1.0, 1.0))):
            raise ValueError("labels must be +-1")
        if not (np.isfinite(self.X_image).all() and np.isfinite(self.X_geometry).all()):
            raise ValueError("features must be finite")

    def __len__(self):
        return len(self.ids)

    def subset(self, idx):
        idx = np.asarray(idx)
        return Dataset(
            [self.ids[i] for i in idx],
            self.X_image[idx],
            self.X_geometry[idx],
            self.y[idx],
        )


# ---------------------------------------------------------------------------
# Smoothed pieces
# ---------------------------------------------------------------------------


def _pos(z, mu):
    """Quadratically smoothed hinge max(0, z) with transition width mu."""
    return np.where(z <= 0, 0.0, np.where(z <= mu, z * z / (2 * mu), z - mu / 2))


def _pos_d(z, mu):
    return np.where(z <= 0, 0.0, np.where(z <= mu, z / mu, 1.0))


def _pos_dd(z, mu):
    return np.where((z > 0) & (z <= mu), 1.0 / mu, 0.0)


def _minimize_smoothed(make_vgh, x0):
    """mu-continuation: short L-BFGS warm start then damped Newton per stage.

    L-BFGS tracks the shrinking smoothing zones cheaply; the Newton pass
    supplies the second-order correction the ill-conditioned kernel blocks
    need and tightens stationarity. Fully deterministic.
    """
    from scipy.optimize import minimize

    x = x0
    f = gnorm = np.inf
    for mu in _MU_SCHEDULE:
        vg = make_vgh(mu, want_hess=False)
        res = minimize(
            vg, x, jac=True, method="L-BFGS-B",
            options=dict(maxiter=400, ftol=1e-16, gtol=1e-12, maxcor=30),
        )
        x, f, gnorm = _newton(make_vgh(mu), res.x, max_iter=100)
    return x, f, gnorm


def _newton(value_grad_hess, x0, max_iter=200, gtol=1e-9):
    """Damped Newton: Levenberg regularization with Armijo backtracking.

    Line-search failure raises the damping (turning the step gradient-like)
    instead of aborting, so ill-conditioned kernel blocks cannot stall it.
    """
    x = x0.copy()
    f, g, H = value_grad_hess(x)
    lam = 1e-10
    n = len(x)
    eye = np.eye(n)
    for _ in range(max_iter):
        gnorm = np.max(np.abs(g))
        if gnorm < gtol * (1.0 + abs(f)):
            break
        moved = False
        while lam < 1e14:
            try:
                step = np.linalg.solve(H + lam * eye, -g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            slope = g @ step
            if slope >= 0:
                lam *= 10
                continue
            t = 1.0
            accepted = False
            for _ in range(30):
                xn = x + t * step
                fn, gn, Hn = value_grad_hess(xn)
                if np.isfinite(fn) and fn <= f + 1e-4 * t * slope:
                    x, f, g, H = xn, fn, gn, Hn
                    accepted = True
                    break
                t *= 0.5
            if accepted:
                lam = max(lam * 0.25, 1e-12)
                moved = True
                break
            lam *= 100
        if not moved:
            break
    return x, f, np.max(np.abs(g))


# ---------------------------------------------------------------------------
# Single-view SVM
# ---------------------------------------------------------------------------


@dataclass
class SvmModel:
    spec: KernelSpec
    C: float
    X: np.ndarray          # training rows (already standardized by caller)
    y: np.ndarray
    alpha: np.ndarray      # representer coefficients
    bias: float
    objective: float

    def decision_values(self, X):
        return gram(self.spec, np.atleast_2d(X), self.X) @ self.alpha + self.bias

    def predict(self, X):
        f = self.decision_values(X)
        return np.where(f >= 0, 1.0, -1.0)

    def dual_coefficients(self):
        """lambda_i in [0, C] recovered from the representer expansion."""
        return self.alpha * self.y

    def kkt_violation(self):
        """Max violation of the dual box, equality, and complementarity."""
        lam = self.dual_coefficients()
        f = self.decision_values(self.X)
        margins = self.y * f
        v = max(float(np.max(-lam)), float(np.max(lam - self.C)))
        v = max(v, abs(float(self.alpha.sum())))  # sum lam_i y_i = 0
        # complementarity: lam ~ 0 where margin > 1, lam ~ C where margin < 1
        slack_hi = np.maximum(margins - 1.0, 0.0)     # should imply lam = 0
        slack_lo = np.maximum(1.0 - margins, 0.0)     # should imply lam = C
        v = max(v, float(np.max(np.minimum(lam / self.C, slack_hi))))
        v = max(v, float(np.max(np.minimum(1.0 - lam / self.C, slack_lo))))
        return v


def svm_objective_value(K, y, C, alpha, bias):
    f = K @ alpha + bias
    return float(
        0.5 * alpha @ (K @ alpha) + C * np.maximum(0.0, 1.0 - y * f).sum()
    )


def train_svm(X, y, C, spec: KernelSpec) -> SvmModel:
    """Soft-margin kernel SVM via the smoothed representer primal."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(np.unique(y)) < 2:
        raise ValueError("training data must contain both classes")
    n = len(X)
    K = gram(spec, X, X) + _RIDGE * np.eye(n)

    def make_vgh(mu, want_hess=True):
        def vgh(theta):
            a, b = theta[:n], theta[n]
            f = K @ a + b
            z = 1.0 - y * f
            obj = 0.5 * a @ (K @ a) + C * _pos(z, mu).sum()
            gf = -C * y * _pos_d(z, mu)
            grad = np.concatenate([K @ (a + gf), [gf.sum()]])
            if not want_hess:
                return obj, grad
            w = C * _pos_dd(z, mu)
            H = np.zeros((n + 1, n + 1))
            Kw = K * w[None, :]
            H[:n, :n] = K + Kw @ K
            H[:n, n] = Kw.sum(axis=1)
            H[n, :n] = H[:n, n]
            H[n, n] = w.sum()
            return obj, grad, H
        return vgh

    theta, obj, gnorm = _minimize_smoothed(make_vgh, np.zeros(n + 1))
    alpha, bias = theta[:n], float(theta[n])
    return SvmModel(
        spec, C, X.copy(), y.copy(), alpha, bias,
        objective=svm_objective_value(K, y, C, alpha, bias),
    )


# ---------------------------------------------------------------------------
# SVM-2K
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Svm2kParams:
    eps: float = DEFAULT_EPS
    C_V: float = DEFAULT_C_V
    C_G: float = DEFAULT_C_G
    D: float = DEFAULT_D
    gamma_V: float | None = None  # None: median heuristic on the training fold
    gamma_G: float | None = None

    def __post_init__(self):
        if self.eps < 0 or self.C_V <= 0 or self.C_G <= 0 or self.D < 0:
            raise ValueError("invalid hyperparameters")


@dataclass
class Svm2kDiagnostics:
    objective: float
    grad_norm: float
    slack_V_sum: float
    slack_G_sum: float
    eta_sum: float
    max_coupling_violation: float


@dataclass
class Svm2kModel:
    params: Svm2kParams
    spec_V: KernelSpec
    spec_G: KernelSpec
    std_V: Standardizer
    std_G: Standardizer
    X_V: np.ndarray            # standardized support rows, image view
    X_G: np.ndarray            # standardized support rows, geometry view
    alpha_V: np.ndarray
    alpha_G: np.ndarray
    bias_V: float
    bias_G: float
    diagnostics: Svm2kDiagnostics

    def _views(self, X_image, X_geometry):
        return (
            self.std_V.transform(X_image),
            self.std_G.transform(X_geometry),
        )

    def machine_outputs(self, X_image, X_geometry):
        """(fV, fG) for raw (unstandardized) feature blocks."""
        V, G = self._views(X_image, X_geometry)
        fV = gram(self.spec_V, V, self.X_V) @ self.alpha_V + self.bias_V
        fG = gram(self.spec_G, G, self.X_G) @ self.alpha_G + self.bias_G
        return fV, fG

    def decision_function(self, X_image, X_geometry):
        fV, fG = self.machine_outputs(X_image, X_geometry)
        return 0.5 * (fV + fG)


def decide(model: Svm2kModel, X_image, X_geometry):
    """Hard labels; f = 0 maps to +1."""
    f = model.decision_function(X_image, X_geometry)
    return np.where(f >= 0, 1.0, -1.0)


def score(model: Svm2kModel, X_image, X_geometry):
    """Sigmoid viewpoint-goodness score in (0, 1)."""
    f = model.decision_function(X_image, X_geometry)
    return 1.0 / (1.0 + np.exp(-f))


def svm2k_objective_value(KV, KG, y, params, aV, bV, aG, bG):
    """Exact (unsmoothed) objective of the joint program."""
    fV = KV @ aV + bV
    fG = KG @ aG + bG
    obj = 0.5 * aV @ (KV @ aV) + 0.5 * aG @ (KG @ aG)
    obj += params.C_V * np.maximum(0.0, 1.0 - y * fV).sum()
    obj += params.C_G * np.maximum(0.0, 1.0 - y * fG).sum()
    if params.D > 0:
        obj += params.D * np.maximum(0.0, np.abs(fV - fG) - params.eps).sum()
    return float(obj)


def _train_svm2k_kernel(KV, KG, y, params: Svm2kParams):
    """Solve the joint program over precomputed kernels; returns coefficients."""
    n = len(y)
    eps = params.eps
    C_V, C_G, D = params.C_V, params.C_G, params.D

    def make_vgh(mu, want_hess=True):
        def vgh(theta):
            aV, bV = theta[:n], theta[n]
            aG, bG = theta[n + 1 : 2 * n + 1], theta[2 * n + 1]
            fV = KV @ aV + bV
            fG = KG @ aG + bG
            zV = 1.0 - y * fV
            zG = 1.0 - y * fG
            obj = 0.5 * aV @ (KV @ aV) + 0.5 * aG @ (KG @ aG)
            obj += C_V * _pos(zV, mu).sum() + C_G * _pos(zG, mu).sum()
            gfV = -C_V * y * _pos_d(zV, mu)
            gfG = -C_G * y * _pos_d(zG, mu)
            wV = C_V * _pos_dd(zV, mu)
            wG = C_G * _pos_dd(zG, mu)
            wX = np.zeros(n)
            if D > 0:
                delta = fV - fG
                sab = np.sqrt(delta * delta + mu * mu)
                z = sab - eps
                obj += D * _pos(z, mu).sum()
                p1 = _pos_d(z, mu)
                p2 = _pos_dd(z, mu)
                ab_d = delta / sab
                ab_dd = (mu * mu) / (sab**3)
                psi_d = D * p1 * ab_d
                psi_dd = D * (p2 * ab_d * ab_d + p1 * ab_dd)
                gfV = gfV + psi_d
                gfG = gfG - psi_d
                wV = wV + psi_dd
                wG = wG + psi_dd
                wX = -psi_dd
            grad = np.concatenate(
                [KV @ (aV + gfV), [gfV.sum()], KG @ (aG + gfG), [gfG.sum()]]
            )
            if not want_hess:
                return obj, grad
            H = np.zeros((2 * n + 2, 2 * n + 2))
            KVw = KV * wV[None, :]
            KGw = KG * wG[None, :]
            H[:n, :n] = KV + KVw @ KV
            H[:n, n] = KVw.sum(axis=1)
            H[n, :n] = H[:n, n]
            H[n, n] = wV.sum()
            o = n + 1
            H[o : o + n, o : o + n] = KG + KGw @ KG
            H[o : o + n, o + n] = KGw.sum(axis=1)
            H[o + n, o : o + n] = H[o : o + n, o + n]
            H[o + n, o + n] = wG.sum()
            if D > 0:
                KVx = KV * wX[None, :]
                H[:n, o : o + n] = KVx @ KG
                H[o : o + n, :n] = H[:n, o : o + n].T
                H[:n, o + n] = KVx.sum(axis=1)
                H[o + n, :n] = H[:n, o + n]
                H[n, o : o + n] = (KG * wX[None, :]).sum(axis=1)
                H[o : o + n, n] = H[n, o : o + n]
                H[n, o + n] = wX.sum()
                H[o + n, n] = H[n, o + n]
            return obj, grad, H
        return vgh

    theta, obj, gnorm = _minimize_smoothed(make_vgh, np.zeros(2 * n + 2))
    if not np.isfinite(obj) or gnorm > 1e-3 * (1.0 + abs(obj)):
        raise ConvergenceError(
            f"joint solver did not reach stationarity (|grad|={gnorm:.2e})",
            best=theta,
        )
    aV, bV = theta[:n], float(theta[n])
    aG, bG = theta[n + 1 : 2 * n + 1], float(theta[2 * n + 1])
    return aV, bV, aG, bG, gnorm


def train_svm2k(data: Dataset, params: Svm2kParams = Svm2kParams(), seed=0) -> Svm2kModel:
    """Train the two-view learner; deterministic for fixed inputs and seed."""
    if len(data) < 2:
        raise ValueError("need at least two samples")
    if len(np.unique(data.y)) < 2:
        raise ValueError("training data must contain both classes")
    std_V = Standardizer.fit(data.X_image)
    std_G = Standardizer.fit(data.X_geometry)
    V = std_V.transform(data.X_image)
    G = std_G.transform(data.X_geometry)
    gamma_V = params.gamma_V or median_heuristic_gamma(V)
    gamma_G = params.gamma_G or median_heuristic_gamma(G)
    spec_V = KernelSpec(gamma_V)
    spec_G = KernelSpec(gamma_G)
    n = len(data)
    KV = gram(spec_V, V, V) + _RIDGE * np.eye(n)
    KG = gram(spec_G, G, G) + _RIDGE * np.eye(n)
    # the solver is deterministic; seed only pins the public contract
    del seed
    aV, bV, aG, bG, gnorm = _train_svm2k_kernel(KV, KG, data.y, params)

    fV = KV @ aV + bV
    fG = KG @ aG + bG
    delta = np.abs(fV - fG)
    eta = np.maximum(0.0, delta - params.eps)
    diagnostics = Svm2kDiagnostics(
        objective=svm2k_objective_value(KV, KG, data.y, params, aV, bV, aG, bG),
        grad_norm=float(gnorm),
        slack_V_sum=float(np.maximum(0.0, 1.0 - data.y * fV).sum()),
        slack_G_sum=float(np.maximum(0.0, 1.0 - data.y * fG).sum()),
        eta_sum=float(eta.sum()),
        max_coupling_violation=float(np.max(delta - eta - params.eps)),
    )
    return Svm2kModel(
        params=params,
        spec_V=spec_V, spec_G=spec_G,
        std_V=std_V, std_G=std_G,
        X_V=V, X_G=G,
        alpha_V=aV, alpha_G=aG, bias_V=bV, bias_G=bG,
        diagnostics=diagnostics,
    )


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------


@dataclass
class CVReport:
    fold_errors: list
    mean_error: float
    skipped_folds: int


def stratified_folds(y, folds, seed):
    """Deterministic stratified fold assignment (round-robin per class)."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    assignment = np.zeros(len(y), dtype=int)
    for cls in np.unique(y):
        idx = np.nonzero(y == cls)[0]
        idx = idx[rng.permutation(len(idx))]
        assignment[idx] = np.arange(len(idx)) % folds
    return assignment


def crossvalidate(data: Dataset, folds=10, params: Svm2kParams = Svm2kParams(),
                  seed=0) -> CVReport:
    """Stratified k-fold error of the two-view learner."""
    if len(data) < folds:
        raise ValueError("need at least as many samples as folds")
    assignment = stratified_folds(data.y, folds, seed)
    errors = []
    skipped = 0
    for fold in range(folds):
        test_idx = np.nonzero(assignment == fold)[0]
        train_idx = np.nonzero(assignment != fold)[0]
        if len(test_idx) == 0:
            continue
        y_train = data.y[train_idx]
        if len(np.unique(y_train)) < 2:
            warnings.warn(f"fold {fold}: a class is absent in training; skipped")
            skipped += 1
            continue
        model = train_svm2k(data.subset(train_idx), params, seed)
        test = data.subset(test_idx)
        pred = decide(model, test.X_image, test.X_geometry)
        errors.append(float(np.mean(pred != test.y)))
    mean = float(np.mean(errors)) if errors else float("nan")
    return CVReport(errors, mean, skipped)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def save_model(model: Svm2kModel, path):
    doc = {
        "version": 1,
        "params": asdict(model.params),
        "gamma_V": model.spec_V.gamma,
        "gamma_G": model.spec_G.gamma,
        "std_V": {
            "mean": model.std_V.mean.tolist(),
            "std": model.std_V.std.tolist(),
            "keep": model.std_V.keep.astype(int).tolist(),
        },
        "std_G": {
            "mean": model.std_G.mean.tolist(),
            "std": model.std_G.std.tolist(),
            "keep": model.std_G.keep.astype(int).tolist(),
        },
        "X_V": model.X_V.tolist(),
        "X_G": model.X_G.tolist(),
        "alpha_V": model.alpha_V.tolist(),
        "alpha_G": model.alpha_G.tolist(),
        "bias_V": model.bias_V,
        "bias_G": model.bias_G,
        "diagnostics": asdict(model.diagnostics),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_model(path) -> Svm2kModel:
    with open(path, "r") as fh:
        doc = json.load(fh)
    if doc.get("version") != 1:
        raise ValueError(f"unsupported model version {doc.get('version')!r}")

    def std(d):
        return Standardizer(
            np.array(d["mean"]), np.array(d["std"]),
            np.array(d["keep"], dtype=bool),
        )

    return Svm2kModel(
        params=Svm2kParams(**doc["params"]),
        spec_V=KernelSpec(doc["gamma_V"]),
        spec_G=KernelSpec(doc["gamma_G"]),
        std_V=std(doc["std_V"]),
        std_G=std(doc["std_G"]),
        X_V=np.array(doc["X_V"]),
        X_G=np.array(doc["X_G"]),
        alpha_V=np.array(doc["alpha_V"]),
        alpha_G=np.array(doc["alpha_G"]),
        bias_V=float(doc["bias_V"]),
        bias_G=float(doc["bias_G"]),
        diagnostics=Svm2kDiagnostics(**doc["diagnostics"]),
    )
