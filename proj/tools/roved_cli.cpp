#include <iostream>

int main() {
    std::cout << "roved cli placeholder\n";
    return 0;
}
