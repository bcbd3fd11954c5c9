// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

// edgesplat command-line driver.
//
//   simulate        preset or scene file + trajectory -> events + ground truth
//   detect-edges    events -> one edge map PGM per chunk
//   init-gaussians  edge map -> Gaussian scene PLY
//   reconstruct     events -> trajectory, scene, loss log
//   eval            trajectories / images -> metrics CSV
//   render          scene PLY + pose -> brightness PGM
//
// Every command takes --config and --seed and writes the effective
// configuration next to its outputs. Failures print one line
// `error: <kind>: <message>` to stderr and exit 1 (usage errors exit 2).

#include "edgesplat/config.hpp"
#include "edgesplat/io/camera_io.hpp"
#include "edgesplat/io/event_io.hpp"
#include "edgesplat/io/pgm.hpp"
#include "edgesplat/io/ply.hpp"
#include "edgesplat/io/scene_io.hpp"
#include "edgesplat/io/tum.hpp"
#include "edgesplat/metrics.hpp"
#include "edgesplat/presets.hpp"
#include "edgesplat/scene_sim.hpp"
#include "edgesplat/slam_loop.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace edgesplat;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides; // key=value
};

void add_common(CLI::App *cmd, Common &c) {
    cmd->add_option("--config", c.config_path, "Configuration file (key = value lines)");
    cmd->add_option("--seed", c.seed, "Random seed (overrides the config)");
    cmd->add_option("--set", c.overrides, "Override one config key, as key=value (repeatable)");
}

Config effective_config(const Common &c) {
    Config cfg = c.config_path.empty() ? Config{} : load_config(c.config_path);
    for (const std::string &kv : c.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw FormatError("--set expects key=value, got '" + kv + "'");
        }
        set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (c.seed) {
        cfg.pipeline.seed = *c.seed;
    }
    cfg.validate();
    return cfg;
}

void make_dir(const std::string &dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw FormatError("cannot create directory " + dir + ": " + ec.message());
    }
}

std::string join(const std::string &dir, const std::string &name) { return (fs::path(dir) / name).string(); }

void write_text(const std::string &path, const std::string &text) { io::detail::write_file(path, text); }

/// Snapshot beside a single-file output: `<path>.config.txt`.
void snapshot_beside(const std::string &path, const Config &cfg) {
    write_text(path + ".config.txt", encode_config(cfg));
}

std::string indexed(const std::string &stem, std::size_t i, const std::string &ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_%03zu", i);
    return stem + buf + ext;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string out;
    std::string scene;
    std::string trajectory;
    std::string camera;
    bool binary = false;
};

void run_simulate(const Common &common, const SimulateArgs &a) {
    const Config cfg = effective_config(common);
    sim::Sequence seq = sim::presets::by_name(cfg.sim.preset);
    if (!a.scene.empty()) {
        seq.scene = io::read_scene(a.scene);
        seq.name = fs::path(a.scene).stem().string();
    }
    if (!a.trajectory.empty()) {
        seq.trajectory = io::read_tum(a.trajectory);
    }
    if (!a.camera.empty()) {
        seq.camera = io::read_camera(a.camera);
    }
    EventStream events = sim::generate_ideal_events(seq);
    if (cfg.sim.noise_ratio > 0.0) {
        Rng rng = keyed_rng(cfg.pipeline.seed, 7);
        const double rate = cfg.sim.noise_ratio * sim::matched_noise_rate(events.size(), *events.span(),
                                                                          events.width(), events.height());
        events = sim::inject_noise(events, rate, rng);
    }

    make_dir(a.out);
    io::write_events(join(a.out, a.binary ? "events.bin" : "events.txt"), events, a.binary);
    io::write_camera(join(a.out, "camera.txt"), seq.camera);
    io::write_scene(join(a.out, "scene.txt"), seq.scene);
    // Ground truth resampled every millisecond, so any estimate timestamp has a partner.
    const Timestamp t0 = seq.trajectory.front().t_us;
    const Timestamp t1 = seq.trajectory.back().t_us;
    std::vector<TimedPose> gt;
    for (Timestamp t = t0; t < t1; t += 1000) {
        gt.push_back({t, sim::pose_at(seq.trajectory, t)});
    }
    gt.push_back({t1, seq.trajectory.back().pose});
    io::write_tum(join(a.out, "gt_trajectory.tum"), gt);
    // Ground-truth brightness and edge masks at every chunk boundary.
    const Duration step = cfg.pipeline.loop.chunk_duration;
    std::size_t i = 0;
    for (Timestamp t = t0;; t = std::min(t + step, t1), ++i) {
        const PoseSE3 pose = sim::pose_at(seq.trajectory, t);
        io::write_pgm(join(a.out, indexed("gt_frame", i, ".pgm")),
                      sim::render_brightness(seq.scene, pose, seq.camera, seq.supersample));
        io::write_pgm(join(a.out, indexed("gt_edges", i, ".pgm")),
                      sim::ground_truth_edge_mask(seq.scene, pose, seq.camera, 2));
        if (t == t1) {
            break;
        }
    }
    write_text(join(a.out, "config.txt"), encode_config(cfg));
    std::printf("%s: %zu events, %zu boundary frames\n", seq.name.c_str(), events.size(), i + 1);
}

// ---------------------------------------------------------------------------

struct DetectArgs {
    std::string events;
    std::string out;
};

void run_detect(const Common &common, const DetectArgs &a) {
    const Config cfg = effective_config(common);
    const PipelineConfig &p = cfg.pipeline;
    const EventStream events = io::read_events(a.events);
    make_dir(a.out);
    const auto chunks = chunk_stream(events, p.loop.chunk_duration);
    for (const Chunk &c : chunks) {
        io::write_pgm(join(a.out, indexed("edges", static_cast<std::size_t>(c.index), ".pgm")),
                      chunk_edge_map(c, p.detector, p.loop.supervision.contrast_threshold));
    }
    write_text(join(a.out, "config.txt"), encode_config(cfg));
    std::printf("%zu edge maps\n", chunks.size());
}

// ---------------------------------------------------------------------------

struct InitArgs {
    std::string edge_map;
    std::string camera;
    std::string out;
};

void run_init(const Common &common, const InitArgs &a) {
    const Config cfg = effective_config(common);
    const PipelineConfig &p = cfg.pipeline;
    const Image M = io::read_pgm(a.edge_map);
    const CameraIntrinsics K = io::read_camera(a.camera);
    if (M.width() != K.width || M.height() != K.height) {
        throw InvalidArgument("edge map resolution does not match the camera");
    }
    Rng rng = keyed_rng(p.seed, 1);
    const GaussianScene scene = initialize_gaussians(edge_gaussians_from_map(M, p.edge_fit), p.budget, K,
                                                     PoseSE3::identity(), p.d_min, p.d_max, rng, p.init);
    io::write_ply(a.out, scene);
    snapshot_beside(a.out, cfg);
    std::printf("%zu gaussians\n", scene.size());
}

// ---------------------------------------------------------------------------

struct ReconstructArgs {
    std::string events;
    std::string camera;
    std::string out;
};

void run_reconstruct(const Common &common, const ReconstructArgs &a) {
    const Config cfg = effective_config(common);
    const EventStream events = io::read_events(a.events);
    const CameraIntrinsics K = io::read_camera(a.camera);
    const PipelineResult r = run_pipeline(events, K, cfg.pipeline);
    make_dir(a.out);
    io::write_tum(join(a.out, "trajectory.tum"), r.trajectory);
    io::write_ply(join(a.out, "scene.ply"), r.scene);
    write_text(join(a.out, "loss.csv"), encode_loss_log(r.log));
    write_text(join(a.out, "config.txt"), encode_config(cfg));
    std::printf("%zu poses, %zu gaussians\n", r.trajectory.size(), r.scene.size());
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string name;
    std::string trajectory;
    std::string gt_trajectory;
    std::vector<std::string> images;
    std::vector<std::string> gt_images;
    std::string out;
};

std::string format_metric(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

void run_eval(const Common &common, const EvalArgs &a) {
    const Config cfg = effective_config(common);
    if (a.images.size() != a.gt_images.size()) {
        throw InvalidArgument("eval: --image and --gt-image must be given the same number of times");
    }
    if (a.trajectory.empty() != a.gt_trajectory.empty()) {
        throw InvalidArgument("eval: --trajectory and --gt-trajectory must be given together");
    }
    double psnr_db = std::nan("");
    double ssim_v = std::nan("");
    if (!a.images.empty()) {
        psnr_db = 0.0;
        ssim_v = 0.0;
        for (std::size_t i = 0; i < a.images.size(); ++i) {
            const ImageScores s = image_scores(io::read_pgm(a.images[i]), io::read_pgm(a.gt_images[i]));
            psnr_db += s.psnr_db / static_cast<double>(a.images.size());
            ssim_v += s.ssim / static_cast<double>(a.images.size());
        }
    }
    double ate = std::nan("");
    std::size_t pairs = 0;
    if (!a.trajectory.empty()) {
        const AteResult r = absolute_trajectory_error(io::read_tum(a.trajectory), io::read_tum(a.gt_trajectory));
        ate = r.rmse;
        pairs = r.n_pairs;
    }
    const std::string name = a.name.empty() ? cfg.sim.preset : a.name;
    const std::string csv = "scene,psnr_db,ssim,ate_rmse_m,n_pairs\n" + name + "," + format_metric(psnr_db) + "," +
                            format_metric(ssim_v) + "," + format_metric(ate) + "," + std::to_string(pairs) + "\n";
    write_text(a.out, csv);
    snapshot_beside(a.out, cfg);
    std::cout << csv;
}

// ---------------------------------------------------------------------------

struct RenderArgs {
    std::string scene;
    std::string camera;
    std::string trajectory;
    std::int64_t time_us = 0;
    std::string out;
};

void run_render(const Common &common, const RenderArgs &a) {
    const Config cfg = effective_config(common);
    const GaussianScene scene = io::read_ply(a.scene);
    const CameraIntrinsics K = io::read_camera(a.camera);
    const PoseSE3 pose = a.trajectory.empty() ? PoseSE3::identity() : sim::pose_at(io::read_tum(a.trajectory), a.time_us);
    io::write_pgm(a.out, rasterize(scene, pose, K, cfg.pipeline.loop.supervision.render).image);
    snapshot_beside(a.out, cfg);
}

const char *error_kind(const std::exception &e) {
    if (dynamic_cast<const TrackingFailure *>(&e) != nullptr) {
        return "tracking-failure";
    }
    if (dynamic_cast<const FormatError *>(&e) != nullptr) {
        return "format";
    }
    if (dynamic_cast<const InvalidArgument *>(&e) != nullptr) {
        return "invalid-argument";
    }
    return "internal";
}

std::string one_line(std::string s) {
    for (char &c : s) {
        if (c == '\n' || c == '\r') {
            c = ' ';
        }
    }
    while (!s.empty() && s.back() == ' ') {
        s.pop_back();
    }
    return s;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"edgesplat: pose-free event-camera reconstruction with edge-guided Gaussian splatting"};
    app.require_subcommand(1);

    Common common;
    SimulateArgs sim_args;
    DetectArgs det_args;
    InitArgs init_args;
    ReconstructArgs rec_args;
    EvalArgs eval_args;
    RenderArgs render_args;

    auto *simulate = app.add_subcommand("simulate", "Render a synthetic sequence into events and ground truth");
    add_common(simulate, common);
    simulate->add_option("--out", sim_args.out, "Output directory")->required();
    simulate->add_option("--scene", sim_args.scene, "Scene description file (default: sim.preset)");
    simulate->add_option("--trajectory", sim_args.trajectory, "Camera trajectory in TUM format");
    simulate->add_option("--camera", sim_args.camera, "Camera intrinsics file");
    simulate->add_flag("--binary", sim_args.binary, "Write packed binary events (drops the declared time span)");

    auto *detect = app.add_subcommand("detect-edges", "Edge maps for every chunk of an event file");
    add_common(detect, common);
    detect->add_option("--events", det_args.events, "Event file")->required();
    detect->add_option("--out", det_args.out, "Output directory")->required();

    auto *init = app.add_subcommand("init-gaussians", "Initialize Gaussians from an edge map");
    add_common(init, common);
    init->add_option("--edge-map", init_args.edge_map, "Edge map PGM")->required();
    init->add_option("--camera", init_args.camera, "Camera intrinsics file")->required();
    init->add_option("--out", init_args.out, "Output PLY")->required();

    auto *reconstruct = app.add_subcommand("reconstruct", "Estimate trajectory and scene from events");
    add_common(reconstruct, common);
    reconstruct->add_option("--events", rec_args.events, "Event file")->required();
    reconstruct->add_option("--camera", rec_args.camera, "Camera intrinsics file")->required();
    reconstruct->add_option("--out", rec_args.out, "Output directory")->required();

    auto *eval = app.add_subcommand("eval", "Image and trajectory metrics as CSV");
    add_common(eval, common);
    eval->add_option("--name", eval_args.name, "Scene label for the CSV row (default: sim.preset)");
    eval->add_option("--trajectory", eval_args.trajectory, "Estimated trajectory (TUM)");
    eval->add_option("--gt-trajectory", eval_args.gt_trajectory, "Ground-truth trajectory (TUM)");
    eval->add_option("--image", eval_args.images, "Predicted image PGM (repeatable)");
    eval->add_option("--gt-image", eval_args.gt_images, "Ground-truth image PGM (repeatable)");
    eval->add_option("--out", eval_args.out, "Output CSV")->required();

    auto *render = app.add_subcommand("render", "Render a Gaussian scene to a PGM");
    add_common(render, common);
    render->add_option("--scene", render_args.scene, "Gaussian scene PLY")->required();
    render->add_option("--camera", render_args.camera, "Camera intrinsics file")->required();
    render->add_option("--trajectory", render_args.trajectory, "Trajectory (TUM); default pose is identity");
    render->add_option("--time-us", render_args.time_us, "Timestamp to sample the trajectory at");
    render->add_option("--out", render_args.out, "Output PGM")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);
        }
        std::cerr << "error: usage: " << one_line(e.what()) << "\n";
        return 2;
    }

    try {
        if (simulate->parsed()) {
            run_simulate(common, sim_args);
        } else if (detect->parsed()) {
            run_detect(common, det_args);
        } else if (init->parsed()) {
            run_init(common, init_args);
        } else if (reconstruct->parsed()) {
            run_reconstruct(common, rec_args);
        } else if (eval->parsed()) {
            run_eval(common, eval_args);
        } else if (render->parsed()) {
            run_render(common, render_args);
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << error_kind(e) << ": " << one_line(e.what()) << "\n";
        return 1;
    }
    return 0;
}
