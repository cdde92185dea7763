#include "cfreg/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cfreg {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

PipelineConfig PipelineConfig::scaled_to(double v_f) {
    PipelineConfig cfg;
    cfg.v_f = v_f;
    cfg.v_c = 4.0 * v_f;
    cfg.node_radius = 2.5 * cfg.v_c;
    cfg.point_radius = 5.0 * v_f;
    cfg.tau_p = 2.0 * v_f;
    cfg.ransac_inlier_tau = 2.0 * v_f;
    return cfg;
}

void PipelineConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0))
            throw std::invalid_argument(std::string("config: ") + name + " must be > 0");
    };
    positive(v_f, "v_f");
    positive(v_c, "v_c");
    positive(node_radius, "node_radius");
    positive(point_radius, "point_radius");
    positive(tau_p, "tau_p");
    positive(ransac_inlier_tau, "ransac_inlier_tau");
    if (!(v_c > v_f)) throw std::invalid_argument("config: v_c must be > v_f");
    if (sinkhorn_iters < 1) throw std::invalid_argument("config: sinkhorn_iters must be >= 1");
    if (!(tau_c > 0.0 && tau_c < 1.0))
        throw std::invalid_argument("config: tau_c must lie in (0, 1)");
    if (!(tau_f >= 0.0)) throw std::invalid_argument("config: tau_f must be >= 0");
    if (k < 1) throw std::invalid_argument("config: k must be >= 1");
    if (ransac_iters < 1) throw std::invalid_argument("config: ransac_iters must be >= 1");
}

PipelineConfig read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open config");
    PipelineConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::istringstream probe(line);
            std::string leftover;
            if (probe >> leftover)
                throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                                         ": expected key = value");
            continue;
        }
        std::istringstream key_s(line.substr(0, eq)), val_s(line.substr(eq + 1));
        std::string key;
        key_s >> key;
        auto parse = [&](auto& field) {
            if (!(val_s >> field))
                throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                                         ": bad value for " + key);
        };
        if (key == "v_f") parse(cfg.v_f);
        else if (key == "v_c") parse(cfg.v_c);
        else if (key == "node_radius") parse(cfg.node_radius);
        else if (key == "point_radius") parse(cfg.point_radius);
        else if (key == "z") parse(cfg.z);
        else if (key == "sinkhorn_iters") parse(cfg.sinkhorn_iters);
        else if (key == "tau_c") parse(cfg.tau_c);
        else if (key == "tau_m") parse(cfg.tau_m);
        else if (key == "k") parse(cfg.k);
        else if (key == "tau_f") parse(cfg.tau_f);
        else if (key == "tau_p") parse(cfg.tau_p);
        else if (key == "ransac_iters") parse(cfg.ransac_iters);
        else if (key == "ransac_inlier_tau") parse(cfg.ransac_inlier_tau);
        else if (key == "samples") parse(cfg.samples);
        else if (key == "seed") parse(cfg.seed);
        else
            throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                                     ": unknown key " + key);
    }
    return cfg;
}

std::string config_to_string(const PipelineConfig& cfg) {
    std::ostringstream out;
    out << "v_f = " << fmt(cfg.v_f) << "\n"
        << "v_c = " << fmt(cfg.v_c) << "\n"
        << "node_radius = " << fmt(cfg.node_radius) << "\n"
        << "point_radius = " << fmt(cfg.point_radius) << "\n"
        << "z = " << fmt(cfg.z) << "\n"
        << "sinkhorn_iters = " << cfg.sinkhorn_iters << "\n"
        << "tau_c = " << fmt(cfg.tau_c) << "\n"
        << "tau_m = " << cfg.tau_m << "\n"
        << "k = " << cfg.k << "\n"
        << "tau_f = " << fmt(cfg.tau_f) << "\n"
        << "tau_p = " << fmt(cfg.tau_p) << "\n"
        << "ransac_iters = " << cfg.ransac_iters << "\n"
        << "ransac_inlier_tau = " << fmt(cfg.ransac_inlier_tau) << "\n"
        << "samples = " << cfg.samples << "\n"
        << "seed = " << cfg.seed << "\n";
    return out.str();
}

void write_config(const std::string& path, const PipelineConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << config_to_string(cfg);
    if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace cfreg
