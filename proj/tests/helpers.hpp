#pragma once

#include "simspec/error.hpp"

#include <doctest.h>

#include <string>
#include <vector>

/// Collects warnings for the lifetime of the object.
struct WarningCapture {
    std::vector<std::string> messages;
    simspec::WarningHandler previous;

    WarningCapture() {
        previous = simspec::set_warning_handler(
            [this](std::string_view m) { messages.emplace_back(m); });
    }
    ~WarningCapture() { simspec::set_warning_handler(previous); }

    bool contains(const std::string& needle) const {
        for (const auto& m : messages)
            if (m.find(needle) != std::string::npos) return true;
        return false;
    }
};

#define CHECK_ERROR_CODE(expr, expected)                                \
    do {                                                                \
        bool thrown_ = false;                                           \
        try {                                                           \
            (void)(expr);                                               \
        } catch (const simspec::Error& e_) {                            \
            thrown_ = true;                                             \
            CHECK(e_.code() == (expected));                             \
        }                                                               \
        CHECK_MESSAGE(thrown_, "expected simspec::Error from " #expr);  \
    } while (0)
