// Command-line front end: single runs, multi-seed campaigns and scan dumps.
#include "lrnbv/config.hpp"
#include "lrnbv/harness.hpp"
#include "lrnbv/sensor.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

namespace {

lrnbv::RunConfig load_config_or_defaults(const std::string& path) {
    return path.empty() ? lrnbv::RunConfig{} : lrnbv::load_config_file(path);
}

std::vector<std::string> split(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    for (std::string item; std::getline(in, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Low-resolution next-best-view reconstruction on synthetic scenes"};
    app.require_subcommand(1);

    std::string scene_path, config_path, method = "lrnbv", out_dir = "out";
    std::uint64_t seed = 0;
    auto* run_cmd = app.add_subcommand("run", "One reconstruction: metrics row, trace and point cloud");
    run_cmd->add_option("--scene", scene_path, "Scene file")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--config", config_path, "Config file (defaults when omitted)")->check(CLI::ExistingFile);
    run_cmd->add_option("--method", method, "lrnbv, nbv or heu")->capture_default_str();
    run_cmd->add_option("--seed", seed, "Run seed")->capture_default_str();
    run_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();

    std::vector<std::string> scene_paths;
    std::string seeds_text = "1..5", methods_text = "lrnbv,nbv,heu";
    auto* campaign_cmd = app.add_subcommand("campaign", "Cross product of scenes, methods and seeds with U-tests");
    campaign_cmd->add_option("--scene", scene_paths, "Scene file (repeatable)")->required()->check(CLI::ExistingFile);
    campaign_cmd->add_option("--config", config_path, "Config file")->check(CLI::ExistingFile);
    campaign_cmd->add_option("--seeds", seeds_text, "N..M or a comma list")->capture_default_str();
    campaign_cmd->add_option("--methods", methods_text, "Comma list of methods")->capture_default_str();
    campaign_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();

    std::vector<double> pose_values;
    auto* scan_cmd = app.add_subcommand("scan", "Render one scan and print 'u v depth' lines");
    scan_cmd->add_option("--scene", scene_path, "Scene file")->required()->check(CLI::ExistingFile);
    scan_cmd->add_option("--config", config_path, "Config file (sensor keys)")->check(CLI::ExistingFile);
    scan_cmd->add_option("--pose", pose_values, "px py pz qx qy qz qw (home pose when omitted)")->expected(7);
    scan_cmd->add_option("--seed", seed, "Noise seed")->capture_default_str();

    auto* config_cmd = app.add_subcommand("config", "Print the resolved configuration");
    config_cmd->add_option("--config", config_path, "Config file")->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        const lrnbv::RunConfig config = load_config_or_defaults(config_path);
        if (*run_cmd) {
            const auto scene = lrnbv::load_named_scene(scene_path);
            const auto result = lrnbv::run_single(scene, config, lrnbv::parse_method(method), seed);
            lrnbv::write_run(result, out_dir);
            std::cout << lrnbv::metrics_header() << "\n" << lrnbv::metrics_row(result) << "\n";
        } else if (*campaign_cmd) {
            std::vector<lrnbv::NamedScene> scenes;
            for (const auto& p : scene_paths) scenes.push_back(lrnbv::load_named_scene(p));
            std::vector<lrnbv::Method> methods;
            for (const auto& m : split(methods_text)) methods.push_back(lrnbv::parse_method(m));
            const auto report = lrnbv::run_campaign(scenes, config, methods, lrnbv::parse_seed_list(seeds_text));
            lrnbv::write_campaign(report, out_dir);
            std::cout << lrnbv::campaign_summary(report);
        } else if (*scan_cmd) {
            const auto scene = lrnbv::load_named_scene(scene_path);
            lrnbv::SensorPose pose = scene.scene.home;
            if (!pose_values.empty()) {
                pose.position = lrnbv::Vec3(pose_values[0], pose_values[1], pose_values[2]);
                pose.orientation =
                    lrnbv::Quat(pose_values[6], pose_values[3], pose_values[4], pose_values[5]).normalized();
            }
            lrnbv::write_scan(std::cout, lrnbv::render_scan(scene.scene, pose, config.recon.sensor, seed));
        } else if (*config_cmd) {
            std::cout << lrnbv::echo_config(config, "");
        }
    } catch (const lrnbv::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const lrnbv::SceneError& e) {
        std::cerr << "scene error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
