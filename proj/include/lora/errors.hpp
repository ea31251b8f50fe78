#pragma once

/* Error taxonomy shared by all modules.
 *
 * ConfigError: a caller-supplied parameter or config file violates a
 *              precondition (maps to CLI exit code 2).
 * FrameError:  payload/symbol-count constraints violated at frame level.
 * IoError:     file system / serialization failures (CLI exit code 3).
 *
 * Synchronization failures are *not* exceptions: they are expected runtime
 * outcomes and are reported through status values.
 */

#include <stdexcept>
#include <string>

namespace lora {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct FrameError : std::runtime_error {
    explicit FrameError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace lora
