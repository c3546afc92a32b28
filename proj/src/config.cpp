#include "situ3d/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace situ3d::cli {

namespace {

struct Field {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse number '" + value + "'");
    }
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw ConfigError("config key '" + key + "': cannot parse integer '" + value + "'");
    return v;
}

// Field table in serialization order.
const std::vector<std::pair<std::string, Field>>& field_table() {
    auto dbl = [](double RunConfig::* member) {
        return Field{[member](RunConfig& c, const std::string& v) {
                         c.*member = parse_double("", v);
                     },
                     [member](const RunConfig& c) { return format_double(c.*member); }};
    };
    auto integer = [](int RunConfig::* member) {
        return Field{[member](RunConfig& c, const std::string& v) {
                         c.*member = static_cast<int>(parse_int("", v));
                     },
                     [member](const RunConfig& c) { return std::to_string(c.*member); }};
    };
    auto u64 = [](std::uint64_t RunConfig::* member) {
        return Field{[member](RunConfig& c, const std::string& v) {
                         c.*member = static_cast<std::uint64_t>(parse_int("", v));
                     },
                     [member](const RunConfig& c) { return std::to_string(c.*member); }};
    };
    auto str = [](std::string RunConfig::* member) {
        return Field{[member](RunConfig& c, const std::string& v) { c.*member = v; },
                     [member](const RunConfig& c) { return c.*member; }};
    };

    static const std::vector<std::pair<std::string, Field>> table = {
        {"seed", u64(&RunConfig::seed)},
        {"n_scenes", integer(&RunConfig::n_scenes)},
        {"episodes_per_scene", integer(&RunConfig::episodes_per_scene)},
        {"train_frac", dbl(&RunConfig::train_frac)},
        {"room_min", dbl(&RunConfig::room_min)},
        {"room_max", dbl(&RunConfig::room_max)},
        {"objects_min", integer(&RunConfig::objects_min)},
        {"objects_max", integer(&RunConfig::objects_max)},
        {"point_density", dbl(&RunConfig::point_density)},
        {"voxel_size", dbl(&RunConfig::voxel_size)},
        {"n_tokens", integer(&RunConfig::n_tokens)},
        {"model_dim", integer(&RunConfig::model_dim)},
        {"heads", integer(&RunConfig::heads)},
        {"pe_hidden", integer(&RunConfig::pe_hidden)},
        {"fusion_layers", integer(&RunConfig::fusion_layers)},
        {"reencode_blocks", integer(&RunConfig::reencode_blocks)},
        {"decoder_layers", integer(&RunConfig::decoder_layers)},
        {"ffn_mult", integer(&RunConfig::ffn_mult)},
        {"text_len", integer(&RunConfig::text_len)},
        {"sigma_scale", dbl(&RunConfig::sigma_scale)},
        {"enlarge", dbl(&RunConfig::enlarge)},
        {"lambda_rot", dbl(&RunConfig::lambda_rot)},
        {"rot_supervision", str(&RunConfig::rot_supervision)},
        {"mode", str(&RunConfig::mode)},
        {"epochs", integer(&RunConfig::epochs)},
        {"batch_size", integer(&RunConfig::batch_size)},
        {"lr", dbl(&RunConfig::lr)},
        {"beta1", dbl(&RunConfig::beta1)},
        {"beta2", dbl(&RunConfig::beta2)},
        {"adam_eps", dbl(&RunConfig::adam_eps)},
        {"weight_decay", dbl(&RunConfig::weight_decay)},
        {"teacher_prob", dbl(&RunConfig::teacher_prob)},
        {"train_seed", u64(&RunConfig::train_seed)},
        {"ablate_seeds", str(&RunConfig::ablate_seeds)},
        {"ablate_modes", str(&RunConfig::ablate_modes)},
        {"out_dir", str(&RunConfig::out_dir)},
    };
    return table;
}

void check(bool ok, const std::string& message) {
    if (!ok) throw ConfigError("config: " + message);
}

} // namespace

RunConfig RunConfig::smoke() {
    RunConfig c;
    c.n_scenes = 40;
    c.episodes_per_scene = 10;
    c.room_min = 3.2;
    c.room_max = 4.4;
    c.point_density = 120.0;
    c.voxel_size = 0.7;
    c.n_tokens = 64;
    c.model_dim = 32;
    c.pe_hidden = 32;
    c.text_len = 24;
    c.sigma_scale = 1.0;
    c.enlarge = 1.5;
    c.epochs = 5;
    return c;
}

RunConfig RunConfig::benchmark() {
    RunConfig c = smoke();
    c.n_scenes = 400;
    c.epochs = 5;
    return c;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    for (const auto& [name, field] : field_table()) {
        if (name == key) {
            try {
                field.set(*this, value);
            } catch (const ConfigError&) {
                throw ConfigError("config key '" + key + "': cannot parse value '" + value + "'");
            }
            return;
        }
    }
    throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::apply_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string trimmed;
        // collapse around '='
        const auto eq = line.find('=');
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
        auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = strip(line.substr(0, eq));
        const std::string value = strip(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
        set(key, value);
        (void)trimmed;
    }
}

void RunConfig::apply_override(const std::string& key_equals_value) {
    const auto eq = key_equals_value.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like key=value: '" + key_equals_value + "'");
    set(key_equals_value.substr(0, eq), key_equals_value.substr(eq + 1));
}

void RunConfig::validate() const {
    check(n_scenes >= 2 && n_scenes <= 100000, "n_scenes must be in [2, 100000]");
    check(episodes_per_scene >= 1 && episodes_per_scene <= 1000,
          "episodes_per_scene must be in [1, 1000]");
    check(train_frac > 0.0 && train_frac < 1.0, "train_frac must be in (0, 1)");
    check(room_min >= 2.0 && room_max <= 20.0 && room_max >= room_min,
          "room bounds must satisfy 2 <= room_min <= room_max <= 20");
    check(objects_min >= 2 && objects_max >= objects_min && objects_max <= 12,
          "object counts must satisfy 2 <= min <= max <= 12");
    check(point_density >= 10.0 && point_density <= 5000.0,
          "point_density must be in [10, 5000]");
    check(voxel_size >= 0.01 && voxel_size <= 2.0, "voxel_size must be in [0.01, 2]");
    check(n_tokens >= 4 && n_tokens <= 4096, "n_tokens must be in [4, 4096]");
    check(model_dim >= 8 && model_dim <= 1024, "model_dim must be in [8, 1024]");
    check(heads >= 1 && heads <= 16 && model_dim % heads == 0,
          "heads must divide model_dim and lie in [1, 16]");
    check(pe_hidden >= 4 && pe_hidden <= 1024, "pe_hidden must be in [4, 1024]");
    check(fusion_layers >= 1 && fusion_layers <= 8, "fusion_layers must be in [1, 8]");
    check(reencode_blocks >= 1 && reencode_blocks <= 8, "reencode_blocks must be in [1, 8]");
    check(decoder_layers >= 1 && decoder_layers <= 8, "decoder_layers must be in [1, 8]");
    check(ffn_mult >= 1 && ffn_mult <= 8, "ffn_mult must be in [1, 8]");
    check(text_len >= 8 && text_len <= 512, "text_len must be in [8, 512]");
    check(sigma_scale > 0.0 && sigma_scale <= 20.0, "sigma_scale must be in (0, 20]");
    check(enlarge >= 1.0 && enlarge <= 10.0, "enlarge must be in [1, 10]");
    check(lambda_rot >= 0.0 && lambda_rot <= 100.0, "lambda_rot must be in [0, 100]");
    check(rot_supervision == "peak" || rot_supervision == "all",
          "rot_supervision must be 'peak' or 'all'");
    net::parse_mode(mode); // throws on unknown names
    check(epochs >= 1 && epochs <= 1000, "epochs must be in [1, 1000]");
    check(batch_size >= 1 && batch_size <= 1024, "batch_size must be in [1, 1024]");
    check(lr > 0.0 && lr <= 1.0, "lr must be in (0, 1]");
    check(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
          "betas must be in [0, 1)");
    check(adam_eps > 0.0, "adam_eps must be positive");
    check(weight_decay >= 0.0 && weight_decay <= 1.0, "weight_decay must be in [0, 1]");
    check(teacher_prob >= 0.0 && teacher_prob <= 1.0, "teacher_prob must be in [0, 1]");
    check(!out_dir.empty(), "out_dir must not be empty");
    ablation_seeds();
    ablation_modes();
}

std::string RunConfig::serialize() const {
    std::string out = "# situ3d run configuration\n";
    for (const auto& [name, field] : field_table()) out += name + " = " + field.get(*this) + "\n";
    return out;
}

net::DataConfig RunConfig::data_config() const {
    net::DataConfig d;
    d.scene_cfg.room_min = room_min;
    d.scene_cfg.room_max = room_max;
    d.scene_cfg.objects_min = objects_min;
    d.scene_cfg.objects_max = objects_max;
    d.scene_cfg.point_density = point_density;
    d.n_scenes = n_scenes;
    d.episodes_per_scene = episodes_per_scene;
    d.train_frac = train_frac;
    d.voxel_size = voxel_size;
    d.n_tokens = n_tokens;
    d.text_len = text_len;
    d.seed = seed;
    return d;
}

net::ModelConfig RunConfig::model_config(int vocab_size, int feature_dim, int n_answers) const {
    net::ModelConfig m;
    m.vocab_size = vocab_size;
    m.feature_dim = feature_dim;
    m.n_answers = n_answers;
    m.text_len = text_len;
    m.dim = model_dim;
    m.pe_hidden = pe_hidden;
    m.heads = heads;
    m.fusion_layers = fusion_layers;
    m.reencode_blocks = reencode_blocks;
    m.decoder_layers = decoder_layers;
    m.ffn_mult = ffn_mult;
    m.init_seed = train_seed;
    return m;
}

net::TrainSettings RunConfig::train_settings() const {
    net::TrainSettings t;
    t.mode = net::parse_mode(mode);
    t.epochs = epochs;
    t.batch_size = batch_size;
    t.lr = lr;
    t.beta1 = beta1;
    t.beta2 = beta2;
    t.eps = adam_eps;
    t.weight_decay = weight_decay;
    t.teacher_prob = teacher_prob;
    t.sigma_scale = sigma_scale;
    t.enlarge = enlarge;
    t.lambda_rot = lambda_rot;
    t.rot_supervision = rot_supervision == "all" ? sit::RotSupervision::All
                                                 : sit::RotSupervision::NearPeak;
    t.seed = train_seed;
    return t;
}

std::vector<std::uint64_t> RunConfig::ablation_seeds() const {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(ablate_seeds);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) seeds.push_back(static_cast<std::uint64_t>(parse_int("ablate_seeds", item)));
    if (seeds.empty()) throw ConfigError("ablate_seeds must list at least one seed");
    return seeds;
}

std::vector<net::Mode> RunConfig::ablation_modes() const {
    std::vector<net::Mode> modes;
    std::stringstream ss(ablate_modes);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) modes.push_back(net::parse_mode(item));
    if (modes.empty()) throw ConfigError("ablate_modes must list at least one mode");
    return modes;
}

} // namespace situ3d::cli
