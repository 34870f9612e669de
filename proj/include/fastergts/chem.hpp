#pragma once

#include "fastergts/chem/descriptors.hpp"
#include "fastergts/chem/graph.hpp"
#include "fastergts/chem/parser.hpp"
#include "fastergts/chem/token.hpp"
#include "fastergts/chem/writer.hpp"
