#include "lrtd/text.hpp"

#include <charconv>

#include "lrtd/errors.hpp"

namespace lrtd {

std::string fmt_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw NumericError("fmt_double: conversion failed");
  return std::string(buf, end);
}

}  // namespace lrtd
