#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "moquad/common.hpp"

namespace moquad {

enum class Split { train, test };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

// A labelled synthetic video. Frames are stored frame-major, row-major,
// channel-interleaved: frames[((t*H + y)*W + x)*C + c].
struct VideoRecord {
    std::int64_t id = 0;
    std::uint32_t T = 0, H = 0, W = 0, C = 0;
    std::vector<std::uint8_t> frames;
    int motion_class = 0;
    int appearance_class = 0;
    Split split = Split::train;

    std::uint8_t at(std::uint32_t t, std::uint32_t y, std::uint32_t x,
                    std::uint32_t c) const {
        return frames[((static_cast<std::size_t>(t) * H + y) * W + x) * C + c];
    }
};

enum class BackgroundMode { unique_per_video, shared_per_class };

struct DatasetConfig {
    int num_train = 200;
    int num_test = 100;
    std::uint32_t T = 32, H = 32, W = 32, C = 1;
    int num_motion_classes = 4;
    int num_appearance_classes = 4;
    BackgroundMode background_mode = BackgroundMode::unique_per_video;
    // First `appearance_cue_classes` motion classes carry a class-specific
    // sprite intensity (a static cue); the rest share one intensity and can
    // only be told apart by their motion.
    int appearance_cue_classes = 0;
    std::uint32_t sprite_size = 8;
    std::uint32_t base_speed = 2;
    std::uint64_t seed = 0;
};

// Per-frame sprite displacement (dy, dx) in pixels for a motion class:
// direction = class % 4 (right, left, down, up), speed tier = class / 4.
struct Velocity {
    int dy = 0;
    int dx = 0;
};
Velocity motion_velocity(int motion_class, const DatasetConfig& cfg);

// Sprite pixel intensity for a motion class (>= 240; backgrounds stay
// <= 217, so sprite pixels are exactly recoverable by thresholding).
std::uint8_t sprite_intensity(int motion_class, const DatasetConfig& cfg);
constexpr std::uint8_t kSpriteThreshold = 240;

// Deterministic generator: motion and appearance labels follow a balanced
// crossed design (independent by construction); each video's content is
// derived from (seed, id) only, so generation order does not matter.
std::vector<VideoRecord> generate_dataset(const DatasetConfig& cfg);

// rawvid container. Little-endian, 24-byte header:
//   "RVID" | u32 version=1 | u32 T | u32 H | u32 W | u32 C
// followed by exactly T*H*W*C payload bytes.
void write_rawvid(const VideoRecord& record, const std::filesystem::path& path);
// Reads frames and dims; labels/split live in the manifest, not the file.
VideoRecord read_rawvid(const std::filesystem::path& path);

struct ManifestEntry {
    std::int64_t id = 0;
    std::string path;  // relative to the manifest's directory
    int motion_class = 0;
    int appearance_class = 0;
    Split split = Split::train;
};

void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::filesystem::path& path);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

// Writes vids/<id>.rvid files plus manifest.jsonl under dir.
void write_dataset(const std::vector<VideoRecord>& records,
                   const std::filesystem::path& dir);
// Loads a dataset written by write_dataset, labels attached from the manifest.
std::vector<VideoRecord> load_dataset(const std::filesystem::path& dir);

}  // namespace moquad
