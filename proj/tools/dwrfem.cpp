#include "dwr/report.hpp"

int main(int argc, char** argv)
{
  return dwr::cli_main(argc, argv);
}
