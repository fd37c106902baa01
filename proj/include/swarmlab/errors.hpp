#pragma once

#include <stdexcept>
#include <string>

namespace swarmlab {

struct EmptyPointSet : std::runtime_error {
    EmptyPointSet() : std::runtime_error("empty point set") {}
};

struct SpawnFailed : std::runtime_error {
    explicit SpawnFailed(const std::string& what) : std::runtime_error(what) {}
};

struct ActionCountMismatch : std::runtime_error {
    ActionCountMismatch(std::size_t got, std::size_t want)
        : std::runtime_error("action count " + std::to_string(got) + " != agent count " +
                             std::to_string(want)) {}
};

struct LengthMismatch : std::runtime_error {
    explicit LengthMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct SizeMismatch : std::runtime_error {
    explicit SizeMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct Diverged : std::runtime_error {
    explicit Diverged(const std::string& what) : std::runtime_error(what) {}
};

struct CheckpointNotFound : std::runtime_error {
    explicit CheckpointNotFound(const std::string& path)
        : std::runtime_error("checkpoint not found: " + path) {}
};

struct ConfigMismatch : std::runtime_error {
    explicit ConfigMismatch(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace swarmlab
