"""Command-line pipeline: register, cluster, features, train, score, recommend.

Every command reads its inputs from flags (optionally seeded from a JSON
config via --config), writes only to its declared output paths, and is
idempotent. Exit codes: 0 success, 1 runtime or convergence failure,
2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .clustering import kmedoids_from_distances, distance_matrix, save_clusters_csv
from .config import load_config
from .dataio import (
    dataset_from_files,
    save_features_csv,
    save_scores_csv,
)
from .errors import ParseError, VantageError
from .features2d import extract_2d
from .features3d import cached_curvature, extract_3d
from .learning import (
    Svm2kParams,
    crossvalidate,
    load_model,
    save_model,
    train_svm2k,
)
from .meshio import load_mesh
from .rasterize import load_png, rasterize, render_shaded, save_png
from .recommend import (
    interpolate_heatmap,
    sample_viewpoints,
    save_grid_csv,
    save_heatmap_png,
    score_viewpoints,
    top_k,
)
from .registration import (
    estimate_similarity,
    ingest_sfm,
    load_correspondences,
    save_transform,
    transfer_camera,
    export_sfm,
    SfmScene,
)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _require(args, *names):
    missing = [n for n in names if getattr(args, n.replace("-", "_"), None) is None]
    if missing:
        raise UsageError(f"missing required input(s): {', '.join('--' + n for n in missing)}")
    for n in names:
        path = getattr(args, n.replace("-", "_"))
        if n not in ("out", "out_dir") and not os.path.exists(path):
            raise UsageError(f"input path does not exist: {path}")


def _fill_from_config(args, cfg, mapping):
    """Flags win; config fields fill paths the command line left unset."""
    for arg_name, cfg_name in mapping.items():
        if getattr(args, arg_name, None) is None:
            setattr(args, arg_name, getattr(cfg, cfg_name))


def cmd_register(args):
    _require(args, "mesh", "sfm", "correspondences")
    mesh = load_mesh(args.mesh)
    scene = ingest_sfm(args.sfm)
    corr = load_correspondences(args.correspondences, mesh)
    result = estimate_similarity(corr)
    save_transform(result, args.out_transform)
    transferred = SfmScene(
        cameras=[
            (cam_id, transfer_camera(result.transform, cam))
            for cam_id, cam in scene.cameras
        ],
        points=scene.points,
        colors=scene.colors,
    )
    export_sfm(transferred, args.out_cameras)
    print(f"registered {len(corr)} correspondences, residual {result.residual:.6g}")
    print(f"transform -> {args.out_transform}")
    print(f"{len(transferred.cameras)} mesh-frame cameras -> {args.out_cameras}")
    return EXIT_OK


def cmd_cluster(args, cfg):
    _require(args, "cameras")
    scene = ingest_sfm(args.cameras)
    if len(scene.cameras) < cfg.k:
        raise UsageError(
            f"{len(scene.cameras)} cameras but k={cfg.k}; reduce --k"
        )
    ids = [cam_id for cam_id, _ in scene.cameras]
    mats = [cam.model_view() for _, cam in scene.cameras]
    assignment = kmedoids_from_distances(distance_matrix(mats), cfg.k, cfg.seed)
    save_clusters_csv(assignment, ids, args.out_clusters)
    sizes = assignment.cluster_sizes()
    order = sorted(
        range(cfg.k), key=lambda c: (-sizes[c], assignment.medoid_indices[c])
    )
    with open(args.out_representatives, "w") as fh:
        fh.write("id,cluster,size\n")
        for c in order:
            fh.write(f"{ids[assignment.medoid_indices[c]]},{c},{sizes[c]}\n")
    print(f"clustered {len(ids)} viewpoints into {cfg.k} groups "
          f"(total cost {assignment.total_cost:.6g})")
    print(f"labels -> {args.out_clusters}")
    print(f"representatives -> {args.out_representatives}")
    return EXIT_OK


def _photo_path(images_dir, photo_id):
    for ext in (".png", ".jpg", ".jpeg", ".PNG", ".JPG", ".JPEG"):
        candidate = os.path.join(images_dir, photo_id + ext)
        if os.path.exists(candidate):
            return candidate
    return None


def cmd_features(args, cfg):
    _require(args, "mesh", "cameras", "images_dir")
    mesh = load_mesh(args.mesh)
    scene = ingest_sfm(args.cameras)
    curv = cached_curvature(mesh)
    ids, X_img, X_geo = [], [], []
    for cam_id, cam in scene.cameras:
        photo = _photo_path(args.images_dir, cam_id)
        if photo is None:
            raise UsageError(f"no image for camera {cam_id!r} in {args.images_dir}")
        img = load_png(photo)
        if img.shape[:2] != (cam.height, cam.width):
            raise UsageError(
                f"image {cam_id!r} is {img.shape[1]}x{img.shape[0]} but the "
                f"camera expects {cam.width}x{cam.height}"
            )
        frame = rasterize(mesh, cam)
        f3 = extract_3d(mesh, cam, curv=curv, frame=frame)
        f2 = extract_2d(img, mask=frame.mask if frame.mask.any() else None)
        ids.append(cam_id)
        X_img.append(f2.vector)
        X_geo.append(f3.vector)
    save_features_csv(args.out, ids, np.array(X_img), np.array(X_geo))
    print(f"extracted {len(ids)} feature rows -> {args.out}")
    return EXIT_OK


def _params(cfg) -> Svm2kParams:
    return Svm2kParams(
        eps=cfg.eps, C_V=cfg.c_v, C_G=cfg.c_g, D=cfg.d,
        gamma_V=cfg.gamma_v, gamma_G=cfg.gamma_g,
    )


def cmd_train(args, cfg):
    _require(args, "features", "labels")
    data = dataset_from_files(args.features, args.labels)
    params = _params(cfg)
    report = crossvalidate(data, folds=cfg.folds, params=params, seed=cfg.seed)
    model = train_svm2k(data, params, seed=cfg.seed)
    save_model(model, args.out_model)
    if args.out_report:
        with open(args.out_report, "w") as fh:
            json.dump(
                {
                    "folds": cfg.folds,
                    "fold_errors": report.fold_errors,
                    "mean_error": report.mean_error,
                    "skipped_folds": report.skipped_folds,
                    "objective": model.diagnostics.objective,
                },
                fh,
                indent=1,
            )
    print(f"{cfg.folds}-fold mean error: {report.mean_error:.4f} "
          f"({report.skipped_folds} folds skipped)")
    print(f"model -> {args.out_model}")
    return EXIT_OK


def cmd_score(args):
    _require(args, "model", "features")
    from .dataio import load_features_csv

    model = load_model(args.model)
    ids, X_img, X_geo = load_features_csv(args.features)
    f = model.decision_function(X_img, X_geo)
    s = 1.0 / (1.0 + np.exp(-f))
    labels = np.where(f >= 0, 1, -1)
    save_scores_csv(args.out, ids, f, s, labels)
    print(f"scored {len(ids)} photos -> {args.out}")
    return EXIT_OK


def cmd_recommend(args, cfg):
    _require(args, "mesh", "model")
    os.makedirs(args.out_dir, exist_ok=True)
    mesh = load_mesh(args.mesh)
    model = load_model(args.model)
    grid = sample_viewpoints(
        mesh,
        radius_factor=cfg.radius_factor,
        phi_band=(cfg.phi_min, cfg.phi_max),
        n_theta=cfg.n_theta,
        n_phi=cfg.n_phi,
        size=cfg.render_size,
    )
    score_viewpoints(mesh, model, grid, threads=cfg.threads)
    save_grid_csv(grid, os.path.join(args.out_dir, "scores.csv"))
    heat = interpolate_heatmap(grid, out_w=4 * cfg.n_theta, out_h=4 * cfg.n_phi)
    save_heatmap_png(heat, os.path.join(args.out_dir, "heatmap.png"))
    best = top_k(grid, cfg.top_k)
    with open(os.path.join(args.out_dir, "topk.csv"), "w") as fh:
        fh.write("rank,theta,phi,score\n")
        for rank, (th, ph, sc) in enumerate(best):
            fh.write(f"{rank},{th:.12g},{ph:.12g},{sc:.12g}\n")
    for rank, (th, ph, _) in enumerate(best):
        i = int(round(th / (2 * np.pi / cfg.n_theta))) % cfg.n_theta
        phis = grid.phis
        j = int(np.argmin(np.abs(phis - ph)))
        cam = grid.camera_at(i, j)
        frame = render_shaded(mesh, cam, light_direction=-cam.axes_in_world()[2])
        save_png(frame.rgb, os.path.join(args.out_dir, f"top{rank:02d}.png"))
    print(f"scored {grid.n_views} viewpoints; best score {best[0][2]:.4f} "
          f"at theta={best[0][0]:.3f}, phi={best[0][1]:.3f}")
    print(f"outputs -> {args.out_dir}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vantage",
        description="Viewpoint evaluation and recommendation for architecture.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="override the config seed")

    p = sub.add_parser("register", help="fit the mesh-to-point-cloud transform "
                                        "and transfer cameras to the mesh frame")
    add_common(p)
    p.add_argument("--mesh")
    p.add_argument("--sfm")
    p.add_argument("--correspondences")
    p.add_argument("--out-transform", default="transform.json")
    p.add_argument("--out-cameras", default="cameras.json")

    p = sub.add_parser("cluster", help="k-medoids viewpoint clustering")
    add_common(p)
    p.add_argument("--cameras")
    p.add_argument("--k", type=int)
    p.add_argument("--out-clusters", default="clusters.csv")
    p.add_argument("--out-representatives", default="representatives.csv")

    p = sub.add_parser("features", help="extract image+geometry feature rows")
    add_common(p)
    p.add_argument("--mesh")
    p.add_argument("--cameras")
    p.add_argument("--images-dir")
    p.add_argument("--out", default="features.csv")

    p = sub.add_parser("train", help="cross-validate and train the learner")
    add_common(p)
    p.add_argument("--features")
    p.add_argument("--labels")
    p.add_argument("--folds", type=int)
    p.add_argument("--out-model", default="model.json")
    p.add_argument("--out-report", default=None)

    p = sub.add_parser("score", help="score photos with a trained model")
    add_common(p)
    p.add_argument("--model")
    p.add_argument("--features")
    p.add_argument("--out", default="scores.csv")

    p = sub.add_parser("recommend", help="sample viewpoints around a model and "
                                         "write heat map + top-k renders")
    add_common(p)
    p.add_argument("--mesh")
    p.add_argument("--model")
    p.add_argument("--n-theta", type=int)
    p.add_argument("--n-phi", type=int)
    p.add_argument("--render-size", type=int)
    p.add_argument("--top-k", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out-dir", default="recommend_out")
    return parser


_CONFIG_KEYS = (
    "seed", "k", "folds", "n_theta", "n_phi", "render_size", "top_k", "threads",
)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        overrides = {
            key: getattr(args, key)
            for key in _CONFIG_KEYS
            if getattr(args, key, None) is not None
        }
        cfg = load_config(args.config, overrides)
        if args.command == "register":
            _fill_from_config(args, cfg, {
                "mesh": "mesh", "sfm": "sfm", "correspondences": "correspondences",
            })
            return cmd_register(args)
        if args.command == "cluster":
            return cmd_cluster(args, cfg)
        if args.command == "features":
            _fill_from_config(args, cfg, {
                "mesh": "mesh", "images_dir": "images_dir",
            })
            return cmd_features(args, cfg)
        if args.command == "train":
            _fill_from_config(args, cfg, {"labels": "labels"})
            return cmd_train(args, cfg)
        if args.command == "score":
            return cmd_score(args)
        if args.command == "recommend":
            _fill_from_config(args, cfg, {"mesh": "mesh"})
            return cmd_recommend(args, cfg)
        raise UsageError(f"unknown command {args.command!r}")
    except (UsageError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except VantageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
