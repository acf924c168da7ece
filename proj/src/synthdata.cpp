#include "moquad/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "moquad/rng.hpp"

namespace moquad {

namespace {

// Stream ids for sub-seed derivation.
constexpr std::uint64_t kStreamVideo = 0x7669ULL;       // per-video draws
constexpr std::uint64_t kStreamBackground = 0x6267ULL;  // background texture

constexpr double kNoiseLo = 0.15;  // background intensity range, kept clear
constexpr double kNoiseHi = 0.85;  // of the sprite threshold

std::uint32_t noise_cell_size(int appearance_class) {
    static constexpr std::uint32_t sizes[3] = {4, 8, 16};
    return sizes[appearance_class % 3];
}

// Procedural value noise: a coarse random lattice, bilinearly interpolated.
void render_background(std::vector<std::uint8_t>& frame, std::uint32_t H,
                       std::uint32_t W, std::uint32_t C, std::uint32_t cell,
                       Rng& rng) {
    const std::uint32_t gh = H / cell + 2;
    const std::uint32_t gw = W / cell + 2;
    std::vector<double> lattice(static_cast<std::size_t>(gh) * gw * C);
    for (auto& v : lattice) v = rng.uniform();

    auto lat = [&](std::uint32_t gy, std::uint32_t gx, std::uint32_t c) {
        return lattice[(static_cast<std::size_t>(gy) * gw + gx) * C + c];
    };

    for (std::uint32_t y = 0; y < H; ++y) {
        const std::uint32_t gy = y / cell;
        const double fy = static_cast<double>(y % cell) / cell;
        for (std::uint32_t x = 0; x < W; ++x) {
            const std::uint32_t gx = x / cell;
            const double fx = static_cast<double>(x % cell) / cell;
            for (std::uint32_t c = 0; c < C; ++c) {
                const double v00 = lat(gy, gx, c);
                const double v01 = lat(gy, gx + 1, c);
                const double v10 = lat(gy + 1, gx, c);
                const double v11 = lat(gy + 1, gx + 1, c);
                const double v = (1 - fy) * ((1 - fx) * v00 + fx * v01) +
                                 fy * ((1 - fx) * v10 + fx * v11);
                const double mapped = kNoiseLo + v * (kNoiseHi - kNoiseLo);
                frame[(static_cast<std::size_t>(y) * W + x) * C + c] =
                    static_cast<std::uint8_t>(std::lround(mapped * 255.0));
            }
        }
    }
}

int floor_mod(long long a, long long m) {
    const long long r = a % m;
    return static_cast<int>(r < 0 ? r + m : r);
}

void validate_config(const DatasetConfig& cfg) {
    if (cfg.num_train <= 0 || cfg.num_test <= 0)
        throw ConfigError("dataset: num_train and num_test must be positive");
    if (cfg.T < 2) throw ConfigError("dataset: T must be >= 2");
    if (cfg.H == 0 || cfg.W == 0)
        throw ConfigError("dataset: frame dims must be positive");
    if (cfg.C != 1 && cfg.C != 3)
        throw ConfigError("dataset: C must be 1 or 3");
    if (cfg.num_motion_classes < 2)
        throw ConfigError("dataset: need at least 2 motion classes");
    if (cfg.num_appearance_classes < 1)
        throw ConfigError("dataset: need at least 1 appearance class");
    if (cfg.appearance_cue_classes < 0 ||
        cfg.appearance_cue_classes > cfg.num_motion_classes)
        throw ConfigError("dataset: appearance_cue_classes out of range");
    if (cfg.appearance_cue_classes > 7)
        throw ConfigError("dataset: at most 7 cue classes fit the sprite palette");
    if (cfg.sprite_size == 0 || cfg.sprite_size > cfg.H || cfg.sprite_size > cfg.W)
        throw ConfigError("dataset: sprite_size must fit the frame");
    if (cfg.base_speed == 0) throw ConfigError("dataset: base_speed must be positive");
}

void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
    buf.push_back(static_cast<std::uint8_t>(v & 0xff));
    buf.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    buf.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    buf.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

const char* split_name(Split s) { return s == Split::train ? "train" : "test"; }

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "test") return Split::test;
    throw FormatError("unknown split name: " + name);
}

Velocity motion_velocity(int motion_class, const DatasetConfig& cfg) {
    const int dir = motion_class % 4;
    const int tier = motion_class / 4;
    const int speed = static_cast<int>(cfg.base_speed) * (tier + 1);
    switch (dir) {
        case 0: return {0, speed};   // right
        case 1: return {0, -speed};  // left
        case 2: return {speed, 0};   // down
        default: return {-speed, 0}; // up
    }
}

std::uint8_t sprite_intensity(int motion_class, const DatasetConfig& cfg) {
    if (motion_class < cfg.appearance_cue_classes)
        return static_cast<std::uint8_t>(kSpriteThreshold + 2 * motion_class);
    return 255;
}

std::vector<VideoRecord> generate_dataset(const DatasetConfig& cfg) {
    validate_config(cfg);

    const int total = cfg.num_train + cfg.num_test;
    const std::size_t frame_px = static_cast<std::size_t>(cfg.H) * cfg.W * cfg.C;

    std::vector<VideoRecord> out;
    out.reserve(total);

    for (int id = 0; id < total; ++id) {
        VideoRecord rec;
        rec.id = id;
        rec.T = cfg.T;
        rec.H = cfg.H;
        rec.W = cfg.W;
        rec.C = cfg.C;
        rec.split = id < cfg.num_train ? Split::train : Split::test;
        // Balanced crossed design: motion and appearance labels cycle at
        // different strides, so their contingency table is uniform.
        rec.motion_class = id % cfg.num_motion_classes;
        rec.appearance_class =
            (id / cfg.num_motion_classes) % cfg.num_appearance_classes;

        Rng vid_rng = Rng::derive(cfg.seed, {kStreamVideo, static_cast<std::uint64_t>(id)});
        const std::uint32_t y0 = static_cast<std::uint32_t>(vid_rng.uniform_below(cfg.H));
        const std::uint32_t x0 = static_cast<std::uint32_t>(vid_rng.uniform_below(cfg.W));

        Rng bg_rng = cfg.background_mode == BackgroundMode::unique_per_video
                         ? Rng::derive(cfg.seed, {kStreamBackground,
                                                  static_cast<std::uint64_t>(id)})
                         : Rng::derive(cfg.seed,
                                       {kStreamBackground, 0xC1A55ULL,
                                        static_cast<std::uint64_t>(rec.appearance_class)});
        std::vector<std::uint8_t> background(frame_px);
        render_background(background, cfg.H, cfg.W, cfg.C,
                          noise_cell_size(rec.appearance_class), bg_rng);

        const Velocity vel = motion_velocity(rec.motion_class, cfg);
        const std::uint8_t intensity = sprite_intensity(rec.motion_class, cfg);

        rec.frames.resize(static_cast<std::size_t>(cfg.T) * frame_px);
        for (std::uint32_t t = 0; t < cfg.T; ++t) {
            std::uint8_t* frame = rec.frames.data() + static_cast<std::size_t>(t) * frame_px;
            std::memcpy(frame, background.data(), frame_px);
            // Toroidal sprite: top-left corner advances by exactly (dy, dx)
            // per frame, wrapping at the borders.
            const int ty = floor_mod(static_cast<long long>(y0) +
                                         static_cast<long long>(vel.dy) * t,
                                     cfg.H);
            const int tx = floor_mod(static_cast<long long>(x0) +
                                         static_cast<long long>(vel.dx) * t,
                                     cfg.W);
            for (std::uint32_t i = 0; i < cfg.sprite_size; ++i) {
                const std::uint32_t y = (ty + i) % cfg.H;
                for (std::uint32_t j = 0; j < cfg.sprite_size; ++j) {
                    const std::uint32_t x = (tx + j) % cfg.W;
                    for (std::uint32_t c = 0; c < cfg.C; ++c) {
                        frame[(static_cast<std::size_t>(y) * cfg.W + x) * cfg.C + c] =
                            intensity;
                    }
                }
            }
        }
        out.push_back(std::move(rec));
    }
    return out;
}

void write_rawvid(const VideoRecord& record, const std::filesystem::path& path) {
    const std::size_t payload = static_cast<std::size_t>(record.T) * record.H *
                                record.W * record.C;
    if (record.frames.size() != payload)
        throw ShapeError("write_rawvid: frame buffer size does not match dims");

    std::vector<std::uint8_t> header;
    header.reserve(24);
    header.push_back('R');
    header.push_back('V');
    header.push_back('I');
    header.push_back('D');
    put_u32(header, 1);
    put_u32(header, record.T);
    put_u32(header, record.H);
    put_u32(header, record.W);
    put_u32(header, record.C);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw MissingInputError("write_rawvid: cannot open " + path.string());
    out.write(reinterpret_cast<const char*>(header.data()),
              static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(record.frames.data()),
              static_cast<std::streamsize>(record.frames.size()));
    if (!out) throw Error("write_rawvid: write failed for " + path.string());
}

VideoRecord read_rawvid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("read_rawvid: cannot open " + path.string());

    std::uint8_t header[24];
    in.read(reinterpret_cast<char*>(header), 24);
    const std::streamsize got = in.gcount();
    if (got < 24)
        throw FormatError("read_rawvid: truncated header at byte offset " +
                          std::to_string(got) + " in " + path.string());
    if (std::memcmp(header, "RVID", 4) != 0)
        throw FormatError("read_rawvid: bad magic at byte offset 0 in " + path.string());
    const std::uint32_t version = get_u32(header + 4);
    if (version != 1)
        throw FormatError("read_rawvid: unsupported version " + std::to_string(version) +
                          " at byte offset 4 in " + path.string());

    VideoRecord rec;
    rec.T = get_u32(header + 8);
    rec.H = get_u32(header + 12);
    rec.W = get_u32(header + 16);
    rec.C = get_u32(header + 20);
    if (rec.T == 0 || rec.H == 0 || rec.W == 0 || rec.C == 0)
        throw FormatError("read_rawvid: zero dimension at byte offset 8 in " +
                          path.string());

    // Staged multiply so the product cannot wrap before the check fires.
    std::uint64_t payload = rec.T;
    for (const std::uint32_t dim : {rec.H, rec.W, rec.C}) {
        payload *= dim;
        if (payload > (1ULL << 31))
            throw FormatError("read_rawvid: dim overflow at byte offset 8 in " +
                              path.string());
    }

    rec.frames.resize(static_cast<std::size_t>(payload));
    in.read(reinterpret_cast<char*>(rec.frames.data()),
            static_cast<std::streamsize>(payload));
    const std::streamsize body = in.gcount();
    if (static_cast<std::uint64_t>(body) < payload)
        throw FormatError("read_rawvid: truncated payload at byte offset " +
                          std::to_string(24 + body) + " in " + path.string());
    char extra;
    in.read(&extra, 1);
    if (in.gcount() > 0)
        throw FormatError("read_rawvid: trailing data at byte offset " +
                          std::to_string(24 + payload) + " in " + path.string());
    return rec;
}

void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw MissingInputError("write_manifest: cannot open " + path.string());
    for (const auto& e : entries) {
        nlohmann::json j;
        j["id"] = e.id;
        j["path"] = e.path;
        j["motion_class"] = e.motion_class;
        j["appearance_class"] = e.appearance_class;
        j["split"] = split_name(e.split);
        out << j.dump() << '\n';
    }
    if (!out) throw Error("write_manifest: write failed for " + path.string());
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("read_manifest: cannot open " + path.string());

    static const std::vector<std::string> known = {"id", "path", "motion_class",
                                                   "appearance_class", "split"};
    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("read_manifest: line " + std::to_string(lineno) + ": " +
                              e.what());
        }
        for (const auto& item : j.items()) {
            if (std::find(known.begin(), known.end(), item.key()) == known.end())
                throw FormatError("read_manifest: line " + std::to_string(lineno) +
                                  ": unknown field \"" + item.key() + "\"");
        }
        ManifestEntry e;
        try {
            e.id = j.at("id").get<std::int64_t>();
            e.path = j.at("path").get<std::string>();
            e.motion_class = j.at("motion_class").get<int>();
            e.appearance_class = j.at("appearance_class").get<int>();
            e.split = split_from_name(j.at("split").get<std::string>());
        } catch (const nlohmann::json::exception& ex) {
            throw FormatError("read_manifest: line " + std::to_string(lineno) + ": " +
                              ex.what());
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

void write_dataset(const std::vector<VideoRecord>& records,
                   const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "vids");
    std::vector<ManifestEntry> entries;
    entries.reserve(records.size());
    for (const auto& rec : records) {
        const std::string rel = "vids/" + std::to_string(rec.id) + ".rvid";
        write_rawvid(rec, dir / rel);
        entries.push_back({rec.id, rel, rec.motion_class, rec.appearance_class, rec.split});
    }
    write_manifest(entries, dir / "manifest.jsonl");
}

std::vector<VideoRecord> load_dataset(const std::filesystem::path& dir) {
    const auto entries = read_manifest(dir / "manifest.jsonl");
    std::vector<VideoRecord> records;
    records.reserve(entries.size());
    for (const auto& e : entries) {
        VideoRecord rec = read_rawvid(dir / e.path);
        rec.id = e.id;
        rec.motion_class = e.motion_class;
        rec.appearance_class = e.appearance_class;
        rec.split = e.split;
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace moquad
