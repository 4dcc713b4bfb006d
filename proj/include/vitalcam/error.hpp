#pragma once

#include <stdexcept>
#include <string>

namespace vitalcam {

// Error identities used across the library. Tests match on the code, not
// the message text.
enum class errc {
    empty_region,
    too_small,
    dimension_mismatch,
    too_many_levels,
    nyquist_violation,
    too_short,
    level_out_of_range,
    length_mismatch,
    non_monotonic_timestamp,
    degenerate_roi,
    no_in_band_peak,
    shape_mismatch,
    bad_magic,
    unsupported_version,
    truncated_file,
    shape_check_failed,
    wrong_input_size,
    empty_dataset,
    bad_label,
    unknown_session,
    malformed_batch,
    too_many_sessions,
    queue_rejected,
    bad_format,
    io_error,
    invalid_argument,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::empty_region: return "EmptyRegion";
        case errc::too_small: return "TooSmall";
        case errc::dimension_mismatch: return "DimensionMismatch";
        case errc::too_many_levels: return "TooManyLevels";
        case errc::nyquist_violation: return "NyquistViolation";
        case errc::too_short: return "TooShort";
        case errc::level_out_of_range: return "LevelOutOfRange";
        case errc::length_mismatch: return "LengthMismatch";
        case errc::non_monotonic_timestamp: return "NonMonotonicTimestamp";
        case errc::degenerate_roi: return "DegenerateRoi";
        case errc::no_in_band_peak: return "NoInBandPeak";
        case errc::shape_mismatch: return "ShapeMismatch";
        case errc::bad_magic: return "BadMagic";
        case errc::unsupported_version: return "UnsupportedVersion";
        case errc::truncated_file: return "TruncatedFile";
        case errc::shape_check_failed: return "ShapeCheckFailed";
        case errc::wrong_input_size: return "WrongInputSize";
        case errc::empty_dataset: return "EmptyDataset";
        case errc::bad_label: return "BadLabel";
        case errc::unknown_session: return "UnknownSession";
        case errc::malformed_batch: return "MalformedBatch";
        case errc::too_many_sessions: return "TooManySessions";
        case errc::queue_rejected: return "QueueRejected";
        case errc::bad_format: return "BadFormat";
        case errc::io_error: return "IoError";
        case errc::invalid_argument: return "InvalidArgument";
    }
    return "UnknownError";
}

class error : public std::runtime_error {
public:
    error(errc code, std::string message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + std::move(message)),
          code_(code) {}

    // `detail` carries a context index (e.g. the offending layer) when one exists.
    error(errc code, std::string message, long detail)
        : std::runtime_error(std::string(errc_name(code)) + ": " + std::move(message)),
          code_(code), detail_(detail) {}

    errc code() const noexcept { return code_; }
    long detail() const noexcept { return detail_; }

private:
    errc code_;
    long detail_ = -1;
};

}  // namespace vitalcam
