#include "hypogen/run_config.hpp"

#include <yaml-cpp/yaml.h>

#include "hypogen/error.hpp"

namespace hypogen {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

const BackendSpec& RunConfig::backend(const std::string& name) const {
    const std::string& wanted = name.empty() ? default_backend : name;
    for (const auto& b : backends)
        if (b.name == wanted) return b;
    throw ConfigError("unknown backend '" + wanted + "' in " + source.string());
}

namespace {

template <typename T>
T read(const YAML::Node& node, const std::string& what) {
    try {
        return node.as<T>();
    } catch (const YAML::Exception& e) {
        throw ConfigError("bad value for '" + what + "': " + e.what());
    }
}

std::vector<std::string> read_strings(const YAML::Node& node, const std::string& what) {
    if (!node || !node.IsSequence()) throw ConfigError("'" + what + "' must be a list");
    std::vector<std::string> out;
    for (const auto& item : node) out.push_back(read<std::string>(item, what));
    return out;
}

void read_engine(const YAML::Node& node, EngineConfig& c) {
    if (!node) return;
    if (!node.IsMap()) throw ConfigError("'engine' must be a mapping");
    for (const auto& kv : node) {
        const std::string key = read<std::string>(kv.first, "engine key");
        const YAML::Node& v = kv.second;
        const std::string what = "engine." + key;
        if (key == "alpha") c.alpha = read<double>(v, what);
        else if (key == "k") c.k = read<std::size_t>(v, what);
        else if (key == "w_max") c.w_max = read<std::size_t>(v, what);
        else if (key == "w_hyp") c.w_hyp = read<std::size_t>(v, what);
        else if (key == "num_init") c.num_init = read<std::size_t>(v, what);
        else if (key == "capacity" || key == "max_hypotheses") c.capacity = read<std::size_t>(v, what);
        else if (key == "num_per_update") c.num_per_update = read<std::size_t>(v, what);
        else if (key == "init_hypotheses") c.init_hypotheses = read<std::size_t>(v, what);
        else if (key == "refine_rounds") c.refine_rounds = read<std::size_t>(v, what);
        else if (key == "first_round") {
            const auto s = read<std::string>(v, what);
            if (s == "data") c.first_round = RefineStart::data;
            else if (s == "literature") c.first_round = RefineStart::literature;
            else throw ConfigError("engine.first_round must be data or literature");
        } else if (key == "t_includes_init") c.t_includes_init = read<bool>(v, what);
        else if (key == "temperature") c.temperature = read<double>(v, what);
        else if (key == "max_tokens") c.max_tokens = read<std::size_t>(v, what);
        else if (key == "seed") c.seed = read<std::uint64_t>(v, what);
        else if (key == "char_budget") c.char_budget = read<std::size_t>(v, what);
        else if (key == "few_shot_count") c.few_shot_count = read<std::size_t>(v, what);
        else if (key == "specificity_boost") c.specificity_boost = read<bool>(v, what);
        else if (key == "max_in_flight") c.max_in_flight = read<std::size_t>(v, what);
        else throw ConfigError("unknown engine setting '" + key + "'");
    }
}

BackendSpec read_backend(const std::string& name, const YAML::Node& node, const std::vector<std::string>& labels) {
    if (!node.IsMap()) throw ConfigError("backend '" + name + "' must be a mapping");
    BackendSpec b;
    b.name = name;
    b.kind = node["kind"] ? read<std::string>(node["kind"], name + ".kind") : "openai";
    b.model_id = node["model_id"] ? read<std::string>(node["model_id"], name + ".model_id") : name;
    if (b.kind == "openai") {
        if (node["base_url"]) b.http.base_url = read<std::string>(node["base_url"], name + ".base_url");
        if (node["api_key_env"]) b.http.api_key_env = read<std::string>(node["api_key_env"], name + ".api_key_env");
        if (node["timeout_seconds"])
            b.http.timeout = std::chrono::seconds(read<long>(node["timeout_seconds"], name + ".timeout_seconds"));
    } else if (b.kind == "mock") {
        b.mock.labels = labels;
        if (node["subject"]) b.mock.subject = read<std::string>(node["subject"], name + ".subject");
        const YAML::Node lex = node["lexicon"];
        if (lex) {
            if (!lex.IsMap()) throw ConfigError("backend '" + name + "': lexicon must map label -> words");
            for (const auto& kv : lex)
                b.mock.lexicon.emplace_back(read<std::string>(kv.first, name + ".lexicon"),
                                            read_strings(kv.second, name + ".lexicon"));
        }
    } else {
        throw ConfigError("backend '" + name + "' has unknown kind '" + b.kind + "' (expected openai or mock)");
    }
    return b;
}

}  // namespace

RunConfig load_run_config(const fs::path& path) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(path.string());
    } catch (const YAML::BadFile&) {
        throw ConfigError("cannot read task config " + path.string());
    } catch (const YAML::Exception& e) {
        throw ConfigError("cannot parse task config " + path.string() + ": " + e.what());
    }
    if (!root.IsMap()) throw ConfigError("task config " + path.string() + " must be a mapping");

    RunConfig rc;
    rc.source = path;
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

    TaskSpec& t = rc.task.spec;
    if (!root["task_id"]) throw ConfigError(path.string() + ": missing task_id");
    t.task_id = read<std::string>(root["task_id"], "task_id");
    if (root["description"]) t.description = read<std::string>(root["description"], "description");
    t.label_set = read_strings(root["labels"], "labels");
    t.field_schema = read_strings(root["fields"], "fields");
    if (root["example_template"]) t.example_template = read<std::string>(root["example_template"], "example_template");

    const YAML::Node roles = root["roles"];
    if (!roles || !roles.IsMap()) throw ConfigError(path.string() + ": 'roles' must map agent roles to template ids");
    for (const auto& kv : roles) {
        const std::string role_name = read<std::string>(kv.first, "roles");
        AgentRole role;
        try {
            role = parse_agent_role(role_name);
        } catch (const Error&) {
            throw ConfigError(path.string() + ": unknown agent role '" + role_name + "'");
        }
        t.template_bindings[role] = read<std::string>(kv.second, "roles." + role_name);
    }
    t.validate();

    if (!root["templates"]) throw ConfigError(path.string() + ": missing 'templates' path");
    rc.template_path = resolve(read<std::string>(root["templates"], "templates"));
    rc.task.templates = TemplateRegistry::load(rc.template_path);
    for (const auto& [role, id] : t.template_bindings)
        if (!rc.task.templates.contains(id))
            throw ConfigError("role " + std::string(to_string(role)) + " is bound to unknown template '" + id + "'");
    if (!t.example_template.empty() && !rc.task.templates.contains(t.example_template))
        throw ConfigError("example_template '" + t.example_template + "' is not in the registry");

    read_engine(root["engine"], rc.engine);
    rc.engine.validate();

    if (root["seeds"]) {
        rc.seeds.clear();
        for (const auto& s : root["seeds"]) rc.seeds.push_back(read<std::uint64_t>(s, "seeds"));
        if (rc.seeds.empty()) throw ConfigError(path.string() + ": 'seeds' is empty");
    }

    const YAML::Node backends = root["backends"];
    if (backends) {
        if (!backends.IsMap()) throw ConfigError(path.string() + ": 'backends' must be a mapping");
        for (const auto& kv : backends)
            rc.backends.push_back(read_backend(read<std::string>(kv.first, "backends"), kv.second, t.label_set));
    }
    if (root["default_backend"]) rc.default_backend = read<std::string>(root["default_backend"], "default_backend");
    else if (!rc.backends.empty()) rc.default_backend = rc.backends.front().name;
    return rc;
}

void apply_overrides(EngineConfig& c, const EngineOverrides& o) {
    if (o.alpha) c.alpha = *o.alpha;
    if (o.k) c.k = *o.k;
    if (o.w_max) c.w_max = *o.w_max;
    if (o.w_hyp) c.w_hyp = *o.w_hyp;
    if (o.num_init) c.num_init = *o.num_init;
    if (o.max_hypotheses) c.capacity = *o.max_hypotheses;
    if (o.refine_rounds) c.refine_rounds = *o.refine_rounds;
    if (o.seed) c.seed = *o.seed;
    c.validate();
}

std::shared_ptr<Transport> make_transport(const BackendSpec& backend) {
    if (backend.kind == "mock") return make_mock_transport(backend.mock);
    return make_http_transport(backend.http);
}

ordered_json engine_to_json(const EngineConfig& c) {
    ordered_json j;
    j["alpha"] = c.alpha;
    j["k"] = c.k;
    j["w_max"] = c.w_max;
    j["w_hyp"] = c.effective_w_hyp();
    j["num_init"] = c.num_init;
    j["capacity"] = c.capacity;
    j["num_per_update"] = c.num_per_update;
    j["init_hypotheses"] = c.effective_init_hypotheses();
    j["refine_rounds"] = c.refine_rounds;
    j["first_round"] = c.first_round == RefineStart::data ? "data" : "literature";
    j["t_includes_init"] = c.t_includes_init;
    j["temperature"] = c.temperature;
    j["max_tokens"] = c.max_tokens;
    j["seed"] = c.seed;
    j["char_budget"] = c.effective_char_budget();
    j["few_shot_count"] = c.few_shot_count;
    j["specificity_boost"] = c.specificity_boost;
    j["max_in_flight"] = c.max_in_flight;
    return j;
}

EngineConfig engine_from_json(const ordered_json& j) {
    EngineConfig c;
    try {
        c.alpha = j.at("alpha").get<double>();
        c.k = j.at("k").get<std::size_t>();
        c.w_max = j.at("w_max").get<std::size_t>();
        c.w_hyp = j.at("w_hyp").get<std::size_t>();
        c.num_init = j.at("num_init").get<std::size_t>();
        c.capacity = j.at("capacity").get<std::size_t>();
        c.num_per_update = j.at("num_per_update").get<std::size_t>();
        c.init_hypotheses = j.at("init_hypotheses").get<std::size_t>();
        c.refine_rounds = j.at("refine_rounds").get<std::size_t>();
        c.first_round = j.at("first_round").get<std::string>() == "literature" ? RefineStart::literature
                                                                               : RefineStart::data;
        c.t_includes_init = j.at("t_includes_init").get<bool>();
        c.temperature = j.at("temperature").get<double>();
        c.max_tokens = j.at("max_tokens").get<std::size_t>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.char_budget = j.at("char_budget").get<std::size_t>();
        c.few_shot_count = j.at("few_shot_count").get<std::size_t>();
        c.specificity_boost = j.at("specificity_boost").get<bool>();
        c.max_in_flight = j.at("max_in_flight").get<std::size_t>();
    } catch (const ordered_json::exception& e) {
        throw InputError(std::string("malformed engine config snapshot: ") + e.what());
    }
    return c;
}

ordered_json task_to_json(const TaskSpec& t) {
    ordered_json j;
    j["task_id"] = t.task_id;
    j["labels"] = t.label_set;
    j["fields"] = t.field_schema;
    ordered_json roles = ordered_json::object();
    for (const auto& [role, id] : t.template_bindings) roles[std::string(to_string(role))] = id;
    j["roles"] = roles;
    j["example_template"] = t.example_template;
    return j;
}

}  // namespace hypogen
