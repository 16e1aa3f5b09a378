"""Two-view learning walkthrough.

Builds a synthetic dataset where each view sees the label through its own
independent noise, then compares tenfold cross-validation error of the
joint two-view learner against each single-view SVM.
"""

import numpy as np

from vantage.learning import (
    Dataset,
    Svm2kParams,
    crossvalidate,
    decide,
    score,
    stratified_folds,
    train_svm,
    train_svm2k,
)

rng = np.random.default_rng(11)
n, d = 120, 5
y = np.where(rng.uniform(size=n) < 0.5, 1.0, -1.0)
# both views carry the label, each through its own independent noise
X_img = y[:, None] * 0.35 + rng.normal(size=(n, d))
X_geo = y[:, None] * 0.35 + rng.normal(size=(n, d))
data = Dataset([f"photo{i}" for i in range(n)], X_img, X_geo, y)

print("tenfold cross-validation of the joint learner ...")
report = crossvalidate(data, folds=10, params=Svm2kParams(), seed=0)
print(f"  two-view mean error: {report.mean_error:.3f}")

folds = stratified_folds(data.y, 10, 0)
errV, errG = [], []
for fold in range(10):
    tr = np.nonzero(folds != fold)[0]
    te = np.nonzero(folds == fold)[0]
    train, test = data.subset(tr), data.subset(te)
    joint = train_svm2k(train, Svm2kParams())
    sv = train_svm(joint.std_V.transform(train.X_image), train.y, 4.0, joint.spec_V)
    errV.append(np.mean(sv.predict(joint.std_V.transform(test.X_image)) != test.y))
    sg = train_svm(joint.std_G.transform(train.X_geometry), train.y, 4.0, joint.spec_G)
    errG.append(np.mean(sg.predict(joint.std_G.transform(test.X_geometry)) != test.y))
print(f"  image-only error:    {np.mean(errV):.3f}")
print(f"  geometry-only error: {np.mean(errG):.3f}")

model = train_svm2k(data, Svm2kParams(), seed=0)
s = score(model, data.X_image[:5], data.X_geometry[:5])
h = decide(model, data.X_image[:5], data.X_geometry[:5])
print("\nfirst five photos: goodness scores", np.round(s, 3).tolist(),
      "labels", h.astype(int).tolist())
print("training diagnostics:", model.diagnostics)
