#include "lrrid/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lrrid/errors.hpp"

namespace lrrid {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) {
            throw std::invalid_argument("config: unknown key \"" + key + "\" in " + where);
        }
    }
}

template <class T>
void read_if(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

Protocol parse_protocol(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "orl_occlusion") {
        reject_unknown(j, {"kind", "level"}, "protocol");
        OrlOcclusion p;
        read_if(j, "level", p.level);
        return p;
    }
    if (kind == "eyaleb_dim") {
        reject_unknown(j, {"kind", "dim"}, "protocol");
        EyalebDim p;
        read_if(j, "dim", p.dim);
        return p;
    }
    if (kind == "ar_scenario") {
        reject_unknown(j, {"kind", "scenario"}, "protocol");
        ArDisguise p;
        p.scenario = parse_ar_scenario(j.at("scenario").get<std::string>());
        if (p.scenario == ArScenario::uniform_noise) {
            throw std::invalid_argument("config: use kind ar_uniform_noise for the noise protocol");
        }
        return p;
    }
    if (kind == "ar_uniform_noise") {
        reject_unknown(j, {"kind", "level"}, "protocol");
        ArUniformNoise p;
        read_if(j, "level", p.level);
        return p;
    }
    if (kind == "synthetic") {
        reject_unknown(j,
                       {"kind", "classes", "height", "width", "images_per_class", "noise",
                        "occlusion"},
                       "protocol");
        Synthetic p;
        read_if(j, "classes", p.classes);
        read_if(j, "height", p.height);
        read_if(j, "width", p.width);
        read_if(j, "images_per_class", p.images_per_class);
        read_if(j, "noise", p.noise);
        read_if(j, "occlusion", p.occlusion);
        return p;
    }
    throw std::invalid_argument("config: unknown protocol kind " + kind);
}

json protocol_to_json(const Protocol& protocol) {
    json j;
    j["kind"] = protocol_kind(protocol);
    if (const auto* p = std::get_if<OrlOcclusion>(&protocol)) j["level"] = p->level;
    if (const auto* p = std::get_if<EyalebDim>(&protocol)) j["dim"] = p->dim;
    if (const auto* p = std::get_if<ArDisguise>(&protocol)) j["scenario"] = to_string(p->scenario);
    if (const auto* p = std::get_if<ArUniformNoise>(&protocol)) j["level"] = p->level;
    if (const auto* p = std::get_if<Synthetic>(&protocol)) {
        j["classes"] = p->classes;
        j["height"] = p->height;
        j["width"] = p->width;
        j["images_per_class"] = p->images_per_class;
        j["noise"] = p->noise;
        j["occlusion"] = p->occlusion;
    }
    return j;
}

PreprocessTarget parse_preprocess(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "identity") {
        reject_unknown(j, {"kind"}, "preprocess");
        return Identity{};
    }
    if (kind == "crop") {
        reject_unknown(j, {"kind", "height", "width"}, "preprocess");
        return Crop{j.at("height").get<int>(), j.at("width").get<int>()};
    }
    if (kind == "downsample") {
        reject_unknown(j, {"kind", "factor"}, "preprocess");
        return Downsample{j.at("factor").get<int>()};
    }
    if (kind == "downsample_to") {
        reject_unknown(j, {"kind", "height", "width"}, "preprocess");
        return DownsampleTo{j.at("height").get<int>(), j.at("width").get<int>()};
    }
    throw std::invalid_argument("config: unknown preprocess kind " + kind);
}

json preprocess_to_json(const PreprocessTarget& target) {
    json j;
    if (std::holds_alternative<Identity>(target)) j["kind"] = "identity";
    if (const auto* t = std::get_if<Crop>(&target)) {
        j = {{"kind", "crop"}, {"height", t->height}, {"width", t->width}};
    }
    if (const auto* t = std::get_if<Downsample>(&target)) {
        j = {{"kind", "downsample"}, {"factor", t->factor}};
    }
    if (const auto* t = std::get_if<DownsampleTo>(&target)) {
        j = {{"kind", "downsample_to"}, {"height", t->height}, {"width", t->width}};
    }
    return j;
}

void parse_hyperparams(const json& j, Hyperparams& h) {
    reject_unknown(j,
                   {"lambda", "beta", "gamma", "mu0", "mu_max", "rho", "eps_conv",
                    "max_outer_iters", "dict_inner_steps", "dict_step", "atom_constraint"},
                   "hyperparams");
    read_if(j, "lambda", h.lambda);
    read_if(j, "beta", h.beta);
    read_if(j, "gamma", h.gamma);
    read_if(j, "mu0", h.mu0);
    read_if(j, "mu_max", h.mu_max);
    read_if(j, "rho", h.rho);
    read_if(j, "eps_conv", h.eps_conv);
    read_if(j, "max_outer_iters", h.max_outer_iters);
    read_if(j, "dict_inner_steps", h.dict_inner_steps);
    if (j.contains("dict_step")) {
        const json& s = j.at("dict_step");
        const std::string policy = s.at("policy").get<std::string>();
        if (policy == "fixed") {
            reject_unknown(s, {"policy", "step"}, "dict_step");
            FixedStep f;
            read_if(s, "step", f.step);
            h.dict_step = f;
        } else if (policy == "backtracking") {
            reject_unknown(s, {"policy", "shrink", "max_trials"}, "dict_step");
            Backtracking b;
            read_if(s, "shrink", b.shrink);
            read_if(s, "max_trials", b.max_trials);
            h.dict_step = b;
        } else {
            throw std::invalid_argument("config: unknown dict_step policy " + policy);
        }
    }
    if (j.contains("atom_constraint")) {
        const std::string c = j.at("atom_constraint").get<std::string>();
        if (c == "unit_ball") {
            h.atom_constraint = AtomConstraint::unit_ball;
        } else if (c == "unit_sphere") {
            h.atom_constraint = AtomConstraint::unit_sphere;
        } else {
            throw std::invalid_argument("config: unknown atom_constraint " + c);
        }
    }
}

json hyperparams_to_json(const Hyperparams& h) {
    json j = {{"lambda", h.lambda},
              {"beta", h.beta},
              {"gamma", h.gamma},
              {"mu0", h.mu0},
              {"mu_max", h.mu_max},
              {"rho", h.rho},
              {"eps_conv", h.eps_conv},
              {"max_outer_iters", h.max_outer_iters},
              {"dict_inner_steps", h.dict_inner_steps},
              {"atom_constraint",
               h.atom_constraint == AtomConstraint::unit_sphere ? "unit_sphere" : "unit_ball"}};
    if (const auto* f = std::get_if<FixedStep>(&h.dict_step)) {
        j["dict_step"] = {{"policy", "fixed"}, {"step", f->step}};
    } else {
        const auto& b = std::get<Backtracking>(h.dict_step);
        j["dict_step"] = {{"policy", "backtracking"}, {"shrink", b.shrink},
                          {"max_trials", b.max_trials}};
    }
    return j;
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: malformed JSON: ") + e.what());
    }
    try {
        if (!root.is_object()) throw std::invalid_argument("config: top level must be an object");
        reject_unknown(root,
                       {"dataset", "protocol", "method", "hyperparams", "atoms_per_class",
                        "train_per_class", "test_per_class", "eta_ridge", "trials", "seed",
                        "output_dir", "occluder", "normalize_columns",
                        "corrupt_before_preprocess", "write_traces", "jobs"},
                       "config");

        ExperimentConfig c = preset(parse_protocol(root.at("protocol")));
        if (root.contains("dataset")) {
            const json& d = root.at("dataset");
            reject_unknown(d, {"path", "layout", "preprocess"}, "dataset");
            if (d.contains("path")) c.dataset.path = d.at("path").get<std::string>();
            if (d.contains("layout")) c.dataset.layout = parse_layout(d.at("layout").get<std::string>());
            if (d.contains("preprocess")) c.dataset.preprocess = parse_preprocess(d.at("preprocess"));
        }
        if (root.contains("method")) c.method = parse_method(root.at("method").get<std::string>());
        if (root.contains("hyperparams")) parse_hyperparams(root.at("hyperparams"), c.hyperparams);
        read_if(root, "atoms_per_class", c.atoms_per_class);
        read_if(root, "train_per_class", c.train_per_class);
        if (root.contains("test_per_class")) {
            const json& t = root.at("test_per_class");
            if (t.is_null()) {
                c.test_per_class.reset();
            } else {
                c.test_per_class = t.get<std::size_t>();
            }
        }
        read_if(root, "eta_ridge", c.eta_ridge);
        read_if(root, "trials", c.trials);
        read_if(root, "seed", c.seed);
        if (root.contains("output_dir")) c.output_dir = root.at("output_dir").get<std::string>();
        if (root.contains("occluder")) c.occluder = root.at("occluder").get<std::string>();
        read_if(root, "normalize_columns", c.normalize_columns);
        read_if(root, "corrupt_before_preprocess", c.corrupt_before_preprocess);
        read_if(root, "write_traces", c.write_traces);
        read_if(root, "jobs", c.jobs);
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string dump_config(const ExperimentConfig& c) {
    json j;
    j["dataset"] = {{"path", c.dataset.path.string()},
                    {"layout", to_string(c.dataset.layout)},
                    {"preprocess", preprocess_to_json(c.dataset.preprocess)}};
    j["protocol"] = protocol_to_json(c.protocol);
    j["method"] = to_string(c.method);
    j["hyperparams"] = hyperparams_to_json(c.hyperparams);
    j["atoms_per_class"] = c.atoms_per_class;
    j["train_per_class"] = c.train_per_class;
    j["test_per_class"] = c.test_per_class ? json(*c.test_per_class) : json(nullptr);
    j["eta_ridge"] = c.eta_ridge;
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir.string();
    j["occluder"] = c.occluder.string();
    j["normalize_columns"] = c.normalize_columns;
    j["corrupt_before_preprocess"] = c.corrupt_before_preprocess;
    j["write_traces"] = c.write_traces;
    j["jobs"] = c.jobs;
    return j.dump(2) + "\n";
}

}  // namespace lrrid
