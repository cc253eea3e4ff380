/*
 * Copyright 2026 The scbm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SCBM_ERROR_HPP
#define SCBM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace scbm {

// Bad arguments or violated type invariants.
class InvalidArgument : public std::invalid_argument
{
public:
	using std::invalid_argument::invalid_argument;
};

// The instance admits no schedule meeting the constraints.
class InfeasibleError : public std::runtime_error
{
public:
	using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& what)
{
	if (!cond)
	{
		throw InvalidArgument(what);
	}
}

} // namespace detail

} // namespace scbm

#endif // SCBM_ERROR_HPP
