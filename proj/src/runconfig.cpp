#include "ftm/runconfig.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "ftm/errors.hpp"

namespace ftm {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse number '" + value + "'");
    }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse integer '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("key '" + key + "': expected true/false, got '" + value + "'");
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= value.size()) {
        std::size_t comma = value.find(',', pos);
        std::string item = trim(value.substr(
            pos, comma == std::string::npos ? std::string::npos : comma - pos));
        if (!item.empty()) out.push_back(parse_double(key, item));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += fmt(v[i]);
    }
    return out;
}

} // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "dataset") dataset = value;
    else if (key == "dataset.has_header") dataset_has_header = parse_bool(key, value);
    else if (key == "dataset.max_links") dataset_max_links = parse_uint(key, value);
    else if (key == "output_dir") output_dir = value;
    else if (key == "seed") seed = parse_uint(key, value);
    else if (key == "model.hidden_dim") model.hidden_dim = parse_uint(key, value);
    else if (key == "model.time_dim") model.time_dim = parse_uint(key, value);
    else if (key == "model.layers") model.layers = parse_uint(key, value);
    else if (key == "model.heads") model.heads = parse_uint(key, value);
    else if (key == "model.frame_len") model.frame_len = parse_uint(key, value);
    else if (key == "model.timeline_len") model.timeline_len = parse_uint(key, value);
    else if (key == "train.lr") train_lr = parse_double(key, value);
    else if (key == "train.epochs") train_epochs = parse_uint(key, value);
    else if (key == "train.batch") train_batch = parse_uint(key, value);
    else if (key == "train.negatives") train_negatives = parse_uint(key, value);
    else if (key == "train.patience") train_patience = parse_uint(key, value);
    else if (key == "split.train_ratio") split_ratios.train = parse_double(key, value);
    else if (key == "split.val_ratio") split_ratios.validation = parse_double(key, value);
    else if (key == "split.test_ratio") split_ratios.test = parse_double(key, value);
    else if (key == "split.new_node_fraction") new_node_fraction = parse_double(key, value);
    else if (key == "eval.setting") {
        if (value != "transductive" && value != "inductive") {
            throw ConfigError("eval.setting must be transductive or inductive, got '" + value +
                              "'");
        }
        eval_setting = value;
    } else if (key == "eval.attack_intensities") {
        attack_intensities = parse_double_list(key, value);
    } else if (key == "eval.attack_repetitions") attack_repetitions = parse_uint(key, value);
    else if (key == "eval.finetune_iterations") finetune_iterations = parse_uint(key, value);
    else if (key == "eval.finetune_max_instances")
        finetune_max_instances = parse_uint(key, value);
    else if (key == "eval.transfer_dataset") transfer_dataset = value;
    else if (key == "eval.sweep_axis") {
        if (value != "neighborhood" && value != "fraction") {
            throw ConfigError("eval.sweep_axis must be neighborhood or fraction, got '" + value +
                              "'");
        }
        sweep_axis = value;
    } else if (key == "eval.stability_nodes") stability_nodes = parse_uint(key, value);
    else if (key == "synth.users") synth.users = parse_uint(key, value);
    else if (key == "synth.items") synth.items = parse_uint(key, value);
    else if (key == "synth.links") synth.links = parse_uint(key, value);
    else if (key == "synth.feature_dim") synth.feature_dim = parse_uint(key, value);
    else if (key == "synth.p") synth.p_preferred = parse_double(key, value);
    else if (key == "synth.noise_sigma") synth.noise_sigma = parse_double(key, value);
    else if (key == "synth.rate") synth.rate = parse_double(key, value);
    else if (key == "synth.seed") synth.seed = parse_uint(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open config file: " + path);
    RunConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << path << ":" << line_no << ": expected 'key = value', got '" << line << "'";
            throw ConfigError(os.str());
        }
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

std::string RunConfig::resolved_text() const {
    std::map<std::string, std::string> kv;
    kv["dataset"] = dataset;
    kv["dataset.has_header"] = dataset_has_header ? "true" : "false";
    kv["dataset.max_links"] = std::to_string(dataset_max_links);
    kv["output_dir"] = output_dir;
    kv["seed"] = std::to_string(seed);
    kv["model.hidden_dim"] = std::to_string(model.hidden_dim);
    kv["model.time_dim"] = std::to_string(model.time_dim);
    kv["model.layers"] = std::to_string(model.layers);
    kv["model.heads"] = std::to_string(model.heads);
    kv["model.frame_len"] = std::to_string(model.frame_len);
    kv["model.timeline_len"] = std::to_string(model.timeline_len);
    kv["train.lr"] = fmt(train_lr);
    kv["train.epochs"] = std::to_string(train_epochs);
    kv["train.batch"] = std::to_string(train_batch);
    kv["train.negatives"] = std::to_string(train_negatives);
    kv["train.patience"] = std::to_string(train_patience);
    kv["split.train_ratio"] = fmt(split_ratios.train);
    kv["split.val_ratio"] = fmt(split_ratios.validation);
    kv["split.test_ratio"] = fmt(split_ratios.test);
    kv["split.new_node_fraction"] = fmt(new_node_fraction);
    kv["eval.setting"] = eval_setting;
    kv["eval.attack_intensities"] = fmt(attack_intensities);
    kv["eval.attack_repetitions"] = std::to_string(attack_repetitions);
    kv["eval.finetune_iterations"] = std::to_string(finetune_iterations);
    kv["eval.finetune_max_instances"] = std::to_string(finetune_max_instances);
    kv["eval.transfer_dataset"] = transfer_dataset;
    kv["eval.sweep_axis"] = sweep_axis;
    kv["eval.stability_nodes"] = std::to_string(stability_nodes);
    kv["synth.users"] = std::to_string(synth.users);
    kv["synth.items"] = std::to_string(synth.items);
    kv["synth.links"] = std::to_string(synth.links);
    kv["synth.feature_dim"] = std::to_string(synth.feature_dim);
    kv["synth.p"] = fmt(synth.p_preferred);
    kv["synth.noise_sigma"] = fmt(synth.noise_sigma);
    kv["synth.rate"] = fmt(synth.rate);
    kv["synth.seed"] = std::to_string(synth.seed);

    std::string out;
    for (const auto& [k, v] : kv) {
        out += k;
        out += " = ";
        out += v;
        out += "\n";
    }
    return out;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig tc;
    tc.learning_rate = train_lr;
    tc.epochs = train_epochs;
    tc.batch_size = train_batch;
    tc.negatives = train_negatives;
    tc.patience = train_patience;
    tc.seed = seed;
    return tc;
}

EvalSetting RunConfig::eval_setting_enum() const {
    return eval_setting == "inductive" ? EvalSetting::Inductive : EvalSetting::Transductive;
}

} // namespace ftm
