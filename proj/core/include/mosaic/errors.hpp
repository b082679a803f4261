#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mosaic {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class SingularTransformError : public Error {
 public:
  using Error::Error;
};

// Normal matrix lost rank. frames() holds the 0-based frames whose blocks failed.
class UnderDeterminedError : public Error {
 public:
  UnderDeterminedError(const std::string& what, std::vector<int> frames)
      : Error(what), frames_(std::move(frames)) {}
  const std::vector<int>& frames() const { return frames_; }

 private:
  std::vector<int> frames_;
};

class ExhaustedError : public Error {
 public:
  using Error::Error;
};

class AlreadyAnnotatedError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace mosaic
