#include "hypogen/templates.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <regex>

#include "hypogen/error.hpp"

namespace hypogen {
namespace fs = std::filesystem;

namespace {

bool is_name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Calls on_literal / on_placeholder for each piece of the text.
template <typename Literal, typename Placeholder>
void scan_placeholders(std::string_view text, Literal on_literal, Placeholder on_placeholder) {
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t open = text.find("{{", pos);
        if (open == std::string_view::npos) break;
        std::size_t name_begin = open + 2;
        std::size_t name_end = name_begin;
        while (name_end < text.size() && is_name_char(text[name_end])) ++name_end;
        if (name_end > name_begin && text.substr(name_end, 2) == "}}") {
            on_literal(text.substr(pos, open - pos));
            on_placeholder(std::string(text.substr(name_begin, name_end - name_begin)));
            pos = name_end + 2;
        } else {
            on_literal(text.substr(pos, name_begin - pos));
            pos = name_begin;
        }
    }
    on_literal(text.substr(pos));
}

std::string strip_one_trailing_newline(std::string s) {
    if (!s.empty() && s.back() == '\n') s.pop_back();
    return s;
}

void load_yaml_file(const fs::path& file, TemplateRegistry& registry) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(file.string());
    } catch (const YAML::Exception& e) {
        throw ConfigError("cannot parse template file " + file.string() + ": " + e.what());
    }
    const YAML::Node list = root["templates"];
    if (!list || !list.IsSequence()) throw ConfigError(file.string() + ": missing 'templates' list");
    for (const auto& node : list) {
        Template t;
        try {
            t.id = node["id"].as<std::string>();
            t.system_text = strip_one_trailing_newline(node["system"] ? node["system"].as<std::string>() : "");
            t.user_text = strip_one_trailing_newline(node["user"].as<std::string>());
            if (node["placeholders"])
                for (const auto& p : node["placeholders"]) t.required_placeholders.insert(p.as<std::string>());
        } catch (const YAML::Exception& e) {
            throw ConfigError(file.string() + ": malformed template entry: " + e.what());
        }
        registry.add(std::move(t));
    }
}

}  // namespace

std::set<std::string> find_placeholders(std::string_view text) {
    std::set<std::string> names;
    scan_placeholders(text, [](std::string_view) {}, [&](std::string name) { names.insert(std::move(name)); });
    return names;
}

std::string substitute(std::string_view text, const RenderContext& context) {
    std::string out;
    out.reserve(text.size());
    scan_placeholders(
        text, [&](std::string_view lit) { out.append(lit); },
        [&](const std::string& name) {
            auto it = context.bindings.find(name);
            if (it == context.bindings.end()) throw ConfigError("missing binding for placeholder '" + name + "'");
            out.append(it->second);
        });
    return out;
}

TemplateRegistry TemplateRegistry::load(const fs::path& path) {
    TemplateRegistry registry;
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(path)) {
            auto ext = entry.path().extension();
            if (entry.is_regular_file() && (ext == ".yaml" || ext == ".yml")) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) load_yaml_file(f, registry);
    } else if (fs::exists(path)) {
        load_yaml_file(path, registry);
    } else {
        throw ConfigError("template path not found: " + path.string());
    }
    return registry;
}

void TemplateRegistry::add(Template tmpl) {
    if (tmpl.id.empty()) throw ConfigError("template with empty id");
    if (templates_.count(tmpl.id)) throw ConfigError("duplicate template id '" + tmpl.id + "'");
    if (trim(tmpl.user_text).empty()) throw ConfigError("template '" + tmpl.id + "' has an empty user text");
    std::set<std::string> used = find_placeholders(tmpl.system_text);
    for (auto& p : find_placeholders(tmpl.user_text)) used.insert(p);
    if (used != tmpl.required_placeholders) {
        std::string detail;
        for (const auto& p : used)
            if (!tmpl.required_placeholders.count(p)) detail += " undeclared:" + p;
        for (const auto& p : tmpl.required_placeholders)
            if (!used.count(p)) detail += " unused:" + p;
        throw ConfigError("template '" + tmpl.id + "' placeholder declaration mismatch:" + detail);
    }
    std::string id = tmpl.id;
    templates_.emplace(std::move(id), std::move(tmpl));
}

const Template& TemplateRegistry::get(const std::string& id) const {
    auto it = templates_.find(id);
    if (it == templates_.end()) throw ConfigError("unknown template '" + id + "'");
    return it->second;
}

RenderedPrompt TemplateRegistry::render(const std::string& id, const RenderContext& context) const {
    const Template& t = get(id);
    for (const auto& name : t.required_placeholders)
        if (!context.bindings.count(name))
            throw ConfigError("template '" + id + "': missing binding for placeholder '" + name + "'");
    return RenderedPrompt{substitute(t.system_text, context), substitute(t.user_text, context)};
}

std::string format_hypothesis_list(const std::vector<std::string>& texts) {
    std::string out;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (i) out += '\n';
        out += std::to_string(i + 1) + ". " + texts[i];
    }
    return out;
}

std::string format_examples(const TemplateRegistry& registry, const TaskSpec& task,
                            std::span<const LabeledExample> examples) {
    if (task.example_template.empty()) throw ConfigError("task '" + task.task_id + "' has no example_template");
    std::string out;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        RenderContext ctx;
        bind_instance(ctx, task, examples[i]);
        ctx.set("index", i + 1).set("label", examples[i].label);
        RenderedPrompt block = registry.render(task.example_template, ctx);
        if (i) out += "\n\n";
        out += block.user;
    }
    return out;
}

void bind_instance(RenderContext& context, const TaskSpec& task, const LabeledExample& example) {
    for (const auto& name : task.field_schema) {
        auto it = example.fields.find(name);
        if (it == example.fields.end())
            throw PreconditionError("example '" + example.id + "' lacks field '" + name + "'");
        context.set(name, it->second);
    }
}

// ---------------------------------------------------------------------------

namespace {

struct NumberedLine {
    std::size_t number;
    std::string rest;
};

// Recognizes "N. text", "N) text", "**N.** text", "### N. text".
std::optional<NumberedLine> match_numbered(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    while (i < line.size() && line[i] == '#') ++i;
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t stars = 0;
    while (i < line.size() && line[i] == '*') ++i, ++stars;
    std::size_t digits_begin = i;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == digits_begin || i - digits_begin > 4) return std::nullopt;
    if (i >= line.size() || (line[i] != '.' && line[i] != ')')) return std::nullopt;
    std::size_t number = std::stoul(std::string(line.substr(digits_begin, i - digits_begin)));
    ++i;
    std::size_t closed = 0;
    while (closed < stars && i < line.size() && line[i] == '*') ++i, ++closed;
    if (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) return std::nullopt;
    std::string rest = trim(line.substr(i));
    // "**1. Title:** body" closes the emphasis later in the line.
    if (stars && closed < stars) {
        const std::string marker(stars - closed, '*');
        if (auto at = rest.find(marker); at != std::string::npos) rest.erase(at, marker.size());
        rest = trim(rest);
    }
    return NumberedLine{number, std::move(rest)};
}

bool looks_like_subitem(std::string_view trimmed) {
    if (trimmed.empty()) return false;
    if (trimmed[0] == '-' || trimmed[0] == '*' || trimmed.substr(0, 3) == "\xE2\x80\xA2") return true;
    return trimmed.size() >= 2 && std::isalpha(static_cast<unsigned char>(trimmed[0])) &&
           (trimmed[1] == '.' || trimmed[1] == ')');
}

}  // namespace

ParsedHypotheses parse_hypothesis_list(std::string_view text, std::size_t expected_count) {
    std::vector<std::string> items;
    std::size_t next = 1;
    bool after_blank = false;
    bool accepting = false;

    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        if (auto numbered = match_numbered(line); numbered && numbered->number == next) {
            items.push_back(numbered->rest);
            ++next;
            after_blank = false;
            accepting = true;
            continue;
        }
        if (items.empty()) continue;
        const std::string t = trim(line);
        if (t.empty()) {
            after_blank = true;
            continue;
        }
        const bool indented = line.front() == ' ' || line.front() == '\t';
        if (after_blank && !indented && !looks_like_subitem(t)) accepting = false;
        if (!accepting) continue;
        if (!items.back().empty()) items.back() += ' ';
        items.back() += t;
    }

    std::vector<std::string> cleaned;
    for (auto& item : items) {
        std::string t = trim(item);
        if (!t.empty()) cleaned.push_back(std::move(t));
    }
    if (cleaned.empty()) throw ParseError("no numbered hypotheses found in model output");
    if (cleaned.size() > expected_count) cleaned.resize(expected_count);
    return ParsedHypotheses{std::move(cleaned), expected_count};
}

namespace {

std::string strip_answer_decoration(std::string s) {
    auto junk = [](char c) {
        return std::isspace(static_cast<unsigned char>(c)) || c == '{' || c == '}' || c == '[' || c == ']' ||
               c == '(' || c == ')' || c == '"' || c == '\'' || c == '*' || c == '`' || c == '.' || c == '!' ||
               c == ':' || c == ',' || c == ';';
    };
    std::size_t b = 0, e = s.size();
    while (b < e && junk(s[b])) ++b;
    while (e > b && junk(s[e - 1])) --e;
    return s.substr(b, e - b);
}

// Positions where `needle` occurs in `haystack` as a whole phrase.
std::vector<std::pair<std::size_t, std::size_t>> phrase_hits(const std::string& haystack,
                                                              const std::string& needle) {
    std::vector<std::pair<std::size_t, std::size_t>> hits;
    if (needle.empty()) return hits;
    auto boundary = [&](std::size_t i) {
        return i >= haystack.size() || !std::isalnum(static_cast<unsigned char>(haystack[i]));
    };
    for (std::size_t p = haystack.find(needle); p != std::string::npos; p = haystack.find(needle, p + 1)) {
        if ((p == 0 || boundary(p - 1)) && boundary(p + needle.size())) hits.emplace_back(p, p + needle.size());
    }
    return hits;
}

std::optional<std::size_t> ordinal_index(const std::string& lowered) {
    static const std::regex ordinal(R"(\b(first|second|third|fourth|1st|2nd|3rd|4th)\s+(argument|text|option|one)\b)");
    static const std::regex numbered(R"(\b(argument|text|option)\s*#?\s*([1-9])\b)");
    std::smatch m;
    if (std::regex_search(lowered, m, ordinal)) {
        const std::string w = m[1].str();
        if (w == "first" || w == "1st") return 0;
        if (w == "second" || w == "2nd") return 1;
        if (w == "third" || w == "3rd") return 2;
        return 3;
    }
    if (std::regex_search(lowered, m, numbered)) return static_cast<std::size_t>(m[2].str()[0] - '1');
    return std::nullopt;
}

}  // namespace

std::string parse_final_answer(std::string_view text, const std::vector<std::string>& label_set) {
    if (label_set.empty()) throw PreconditionError("parse_final_answer: empty label set");
    static const std::regex marker(R"(final\s+answer\s*:)", std::regex::icase);

    const std::string s(text);
    std::size_t marker_end = std::string::npos;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), marker); it != std::sregex_iterator(); ++it)
        marker_end = static_cast<std::size_t>(it->position(0) + it->length(0));
    if (marker_end == std::string::npos) throw ParseError("no 'Final answer:' marker in model output");

    std::size_t line_end = s.find('\n', marker_end);
    std::string answer = strip_answer_decoration(s.substr(marker_end, line_end == std::string::npos
                                                                          ? std::string::npos
                                                                          : line_end - marker_end));
    // The answer may sit on the following line.
    while (answer.empty() && line_end != std::string::npos) {
        std::size_t next_end = s.find('\n', line_end + 1);
        answer = strip_answer_decoration(
            s.substr(line_end + 1, next_end == std::string::npos ? std::string::npos : next_end - line_end - 1));
        line_end = next_end;
    }
    if (answer.empty()) throw ParseError("empty answer after 'Final answer:' marker");

    for (const auto& label : label_set)
        if (iequals(trim(label), answer)) return label;

    const std::string lowered = to_lower(answer);
    std::vector<std::pair<std::size_t, std::vector<std::pair<std::size_t, std::size_t>>>> matched;
    for (std::size_t i = 0; i < label_set.size(); ++i) {
        auto hits = phrase_hits(lowered, to_lower(trim(label_set[i])));
        if (!hits.empty()) matched.emplace_back(i, std::move(hits));
    }
    // A label found only inside a longer matched label ("stress" within
    // "no stress") does not count.
    std::vector<std::size_t> survivors;
    for (const auto& [i, hits] : matched) {
        bool all_nested = true;
        for (const auto& h : hits) {
            bool nested = false;
            for (const auto& [j, other] : matched) {
                if (j == i) continue;
                for (const auto& o : other)
                    if (o.first <= h.first && h.second <= o.second && (o.second - o.first) > (h.second - h.first))
                        nested = true;
            }
            if (!nested) all_nested = false;
        }
        if (!all_nested) survivors.push_back(i);
    }
    if (survivors.size() == 1) return label_set[survivors.front()];
    if (survivors.size() > 1) throw ParseError("ambiguous answer '" + answer + "' matches several labels");

    if (auto idx = ordinal_index(lowered); idx && *idx < label_set.size()) return label_set[*idx];
    throw ParseError("answer '" + answer + "' matches no label");
}

}  // namespace hypogen
