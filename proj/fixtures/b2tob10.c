#include <stdio.h>
#include <string.h>

static int b2tob10(const char *binary) {
    char bin[128];
    int size = (int)strlen(binary);
    for (int k = 0; k < size; k++)
        bin[k] = binary[size - 1 - k];

    if (size == 0)
        return 0;

    int pos = 1, i = 2, number = 0, count, aux;

    number += bin[0] - '0';

    while (i <= 1 << size - 1) {
        aux = i;
        count = 0;
        while (aux > 0) {
            count++;
            aux = aux & (aux - 1);
        }
        if (count > 1) {
            i += 2;
            continue;
        }

        number += (bin[pos] - '0') * i;
        pos++;

        i += 2;
    }

    return number;
}

int main(void) {
    char line[128] = {0};
    if (scanf("%127s", line) != 1)
        line[0] = '\0';
    printf("%d\n", b2tob10(line));
    return 0;
}
