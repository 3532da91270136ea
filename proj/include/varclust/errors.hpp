#pragma once

#include <stdexcept>
#include <string>

namespace varclust {

// Every library failure derives from Error so callers can map it to an exit code.
class Error : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
	using Error::Error;
};

class InsufficientData : public Error {
public:
	using Error::Error;
};

class InvalidCovariance : public Error {
public:
	using Error::Error;
};

class RangeError : public Error {
public:
	using Error::Error;
};

class InitFailure : public Error {
public:
	using Error::Error;
};

class FitFailure : public Error {
public:
	using Error::Error;
};

class SimulationFailure : public Error {
public:
	using Error::Error;
};

class IoError : public Error {
public:
	using Error::Error;
};

// NaN or otherwise unusable intermediate value at (series, component).
class NumericFailure : public Error {
public:
	NumericFailure(const std::string &what, int series, int component)
	    : Error(what + " (series " + std::to_string(series) + ", component " +
	            std::to_string(component) + ")"),
	      series_(series), component_(component) {}

	int series() const { return series_; }
	int component() const { return component_; }

private:
	int series_;
	int component_;
};

} // namespace varclust
