for (int i = 0; i < arr.length(); i++)
   if (arr[i] >= max)
      max = arr[i];
