#include "hypogen/dataset_io.hpp"

#include <fstream>
#include "json.hpp"

#include "hypogen/error.hpp"

namespace hypogen {

using nlohmann::ordered_json;

Dataset load_dataset(const std::filesystem::path& path, const TaskSpec& task,
                     std::optional<SplitTag> expected) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read dataset file " + path.string());

    Dataset dataset;
    std::optional<SplitTag> file_split;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        ordered_json record;
        try {
            record = ordered_json::parse(line);
        } catch (const ordered_json::parse_error& e) {
            throw InputError(where + ": malformed JSON (" + e.what() + ")");
        }
        if (!record.is_object()) throw InputError(where + ": record is not an object");
        LabeledExample ex;
        try {
            ex.id = record.at("id").is_string() ? record.at("id").get<std::string>()
                                                : record.at("id").dump();
            ex.label = record.at("label").get<std::string>();
            for (const auto& [name, value] : record.at("fields").items())
                ex.fields[name] = value.get<std::string>();
        } catch (const ordered_json::exception& e) {
            throw InputError(where + ": record needs id, fields, label (" + e.what() + ")");
        }
        if (record.contains("split")) {
            SplitTag tag = parse_split_tag(record["split"].get<std::string>());
            if (file_split && *file_split != tag)
                throw InputError(where + ": mixed split tags in one dataset file");
            file_split = tag;
        }
        dataset.examples.push_back(std::move(ex));
    }

    if (file_split && expected && *file_split != *expected)
        throw InputError(path.string() + ": dataset is tagged '" + std::string(to_string(*file_split)) +
                         "' but '" + std::string(to_string(*expected)) + "' was expected");
    dataset.split = file_split.value_or(expected.value_or(SplitTag::train));
    return validate_dataset(std::move(dataset), task);
}

void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write dataset file " + path.string());
    for (const auto& ex : dataset.examples) {
        ordered_json record;
        record["id"] = ex.id;
        record["fields"] = ordered_json::object();
        for (const auto& [k, v] : ex.fields) record["fields"][k] = v;
        record["label"] = ex.label;
        record["split"] = std::string(to_string(dataset.split));
        out << record.dump() << '\n';
    }
}

}  // namespace hypogen
