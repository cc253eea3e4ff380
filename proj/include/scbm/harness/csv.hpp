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

#ifndef SCBM_HARNESS_CSV_HPP
#define SCBM_HARNESS_CSV_HPP

// Tables with a fixed column order, written as RFC 4180 CSV.

#include <scbm/error.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace scbm::harness {

class IoError : public std::runtime_error
{
public:
	using std::runtime_error::runtime_error;
};

struct Table
{
	std::vector<std::string> header;
	std::vector<std::vector<std::string>> rows;

	std::size_t column(const std::string& name) const
	{
		for (std::size_t i = 0; i < header.size(); ++i)
		{
			if (header[i] == name)
			{
				return i;
			}
		}
		throw InvalidArgument("table: no column named '" + name + "'");
	}

	const std::string& at(std::size_t row, const std::string& name) const { return rows.at(row).at(column(name)); }
};

// Nine significant digits; non-finite values spelled out.
inline std::string format_number(double v)
{
	if (std::isnan(v))
	{
		return "nan";
	}
	if (std::isinf(v))
	{
		return v > 0 ? "inf" : "-inf";
	}
	char buf[32];
	std::snprintf(buf, sizeof buf, "%.9g", v == 0 ? 0.0 : v);
	return buf;
}

inline std::string format_bool(bool v) { return v ? "true" : "false"; }

inline std::string quote_field(const std::string& f)
{
	if (f.find_first_of(",\"\r\n") == std::string::npos)
	{
		return f;
	}
	std::string out = "\"";
	for (char c : f)
	{
		if (c == '"')
		{
			out += '"';
		}
		out += c;
	}
	out += '"';
	return out;
}

inline void write_csv(const Table& t, std::ostream& os)
{
	auto line = [&](const std::vector<std::string>& fields) {
		for (std::size_t i = 0; i < fields.size(); ++i)
		{
			os << (i ? "," : "") << quote_field(fields[i]);
		}
		os << "\r\n";
	};
	line(t.header);
	for (const auto& r : t.rows)
	{
		scbm::detail::require(r.size() == t.header.size(), "csv: row width differs from the header");
		line(r);
	}
}

inline std::string to_csv(const Table& t)
{
	std::ostringstream os;
	write_csv(t, os);
	return os.str();
}

inline void emit_csv(const Table& t, const std::string& path)
{
	std::ofstream f(path, std::ios::binary);
	if (!f)
	{
		throw IoError("cannot open '" + path + "' for writing");
	}
	write_csv(t, f);
	f.flush();
	if (!f)
	{
		throw IoError("write to '" + path + "' failed");
	}
}

// Parses what write_csv produces; accepts LF or CRLF line ends.
inline Table read_csv(std::istream& is)
{
	std::vector<std::vector<std::string>> records;
	std::vector<std::string> rec;
	std::string field;
	bool quoted = false;
	bool any = false;
	char c = 0;
	auto end_record = [&] {
		rec.push_back(std::move(field));
		field.clear();
		records.push_back(std::move(rec));
		rec.clear();
		any = false;
	};
	while (is.get(c))
	{
		if (quoted)
		{
			if (c == '"')
			{
				if (is.peek() == '"')
				{
					is.get(c);
					field += '"';
				}
				else
				{
					quoted = false;
				}
			}
			else
			{
				field += c;
			}
			continue;
		}
		switch (c)
		{
		case '"':
			quoted = true;
			any = true;
			break;
		case ',':
			rec.push_back(std::move(field));
			field.clear();
			any = true;
			break;
		case '\r':
			break;
		case '\n':
			end_record();
			break;
		default:
			field += c;
			any = true;
		}
	}
	if (quoted)
	{
		throw InvalidArgument("csv: unterminated quoted field");
	}
	if (any || !rec.empty())
	{
		end_record();
	}
	Table t;
	if (records.empty())
	{
		return t;
	}
	t.header = std::move(records.front());
	t.rows.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
	return t;
}

inline Table read_csv_file(const std::string& path)
{
	std::ifstream f(path, std::ios::binary);
	if (!f)
	{
		throw IoError("cannot open '" + path + "' for reading");
	}
	return read_csv(f);
}

} // namespace scbm::harness

#endif // SCBM_HARNESS_CSV_HPP
